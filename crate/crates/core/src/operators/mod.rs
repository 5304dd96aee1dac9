//! Monotone operators and the bridge to bifunctions: `A_F`, `F_A`, normal
//! cones, membership tests and grid-based zero finding.
//!
//! `A_F x = { u : F(x, y) + <x - y, u> >= 0 for all y in C }` for `x` in `C`
//! (empty otherwise), and `F_A(x, y) = max_{u in A x} <y - x, u>`.
//! In finite dimension `span(C - C)` is always closed, so the sum rule
//! `zer(A_F + A_G) = S_{F+G}` holds without further qualification.

mod bruteforce;
mod image;

use std::sync::Arc;

pub use bruteforce::{
    equilibrium_bruteforce, grid_for_box, hausdorff, zeros_bruteforce, GridSpec, DEFAULT_U_BOUND, SLACK_STEPS,
};
pub use image::Image;

use crate::bifunctions::{AffineMap, Bifunction, ConvexFunction, Family};
use crate::error::{Error, Result};
use crate::hilbert::{local_probes, unit_directions, ConvexSet, Vector, MEMBERSHIP_TOL};
use crate::resolvents::ResolventOracle;

/// Global sample size of the sampled membership test for `A_F`.
pub const MEMBERSHIP_GLOBAL_SAMPLES: usize = 192;
/// Radii of the local probes that complete the 256-point membership sample.
pub const MEMBERSHIP_RADII: [f64; 4] = [1.0, 1e-1, 1e-2, 1e-3];
pub const MEMBERSHIP_SEED: u64 = 0x5eed_0002;

const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum OperatorKind {
    /// `x -> M x + c`.
    Affine(AffineMap),
    /// `x -> df(x)`.
    Subdifferential(ConvexFunction),
    /// `x -> N_C(x)`.
    NormalCone(ConvexSet),
    /// `A_F` for a bifunction `F`.
    FromBifunction(Bifunction),
    /// Pointwise sum of two operators on the intersection of their domains.
    Sum(Box<MonotoneOperator>, Box<MonotoneOperator>),
}

/// A maximally monotone operator on R^d with a resolvent and, for the
/// families above, an evaluation oracle.
#[derive(Clone, Debug)]
pub struct MonotoneOperator {
    dim: usize,
    domain: ConvexSet,
    kind: OperatorKind,
    membership_sample: Arc<Vec<Vector>>,
    directions: Arc<Vec<Vector>>,
}

impl MonotoneOperator {
    fn build(domain: ConvexSet, kind: OperatorKind) -> Self {
        let dim = domain.dim();
        let (membership_sample, directions) = match &kind {
            OperatorKind::FromBifunction(_) => (
                domain.sample_points(MEMBERSHIP_GLOBAL_SAMPLES, MEMBERSHIP_SEED),
                unit_directions(dim, 64 / MEMBERSHIP_RADII.len(), MEMBERSHIP_SEED),
            ),
            _ => (Vec::new(), Vec::new()),
        };
        MonotoneOperator {
            dim,
            domain,
            kind,
            membership_sample: Arc::new(membership_sample),
            directions: Arc::new(directions),
        }
    }

    pub fn affine(map: AffineMap) -> Result<Self> {
        let domain = ConvexSet::whole_space(map.dim())?;
        Ok(Self::build(domain, OperatorKind::Affine(map)))
    }

    pub fn subdifferential(f: ConvexFunction) -> Result<Self> {
        let domain = ConvexSet::whole_space(f.dim())?;
        Ok(Self::build(domain, OperatorKind::Subdifferential(f)))
    }

    pub fn normal_cone(set: ConvexSet) -> Self {
        Self::build(set.clone(), OperatorKind::NormalCone(set))
    }

    /// `A + B`. The domain is the intersection of the two domains.
    pub fn sum(a: MonotoneOperator, b: MonotoneOperator) -> Result<Self> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch {
                expected: a.dim,
                found: b.dim,
            });
        }
        let domain = if a.domain.is_whole_space() {
            b.domain.clone()
        } else if b.domain.is_whole_space() || a.domain == b.domain {
            a.domain.clone()
        } else {
            ConvexSet::intersection(vec![a.domain.clone(), b.domain.clone()])?
        };
        Ok(Self::build(domain, OperatorKind::Sum(Box::new(a), Box::new(b))))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &ConvexSet {
        &self.domain
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    /// Whether [`MonotoneOperator::evaluate`] is available at least at interior points.
    pub fn has_evaluate(&self) -> bool {
        match &self.kind {
            OperatorKind::Affine(_) | OperatorKind::Subdifferential(_) | OperatorKind::NormalCone(_) => true,
            OperatorKind::FromBifunction(f) => family_has_partial(f),
            OperatorKind::Sum(a, b) => a.has_evaluate() && b.has_evaluate(),
        }
    }

    /// The image `A x`.
    ///
    /// Errors with [`Error::OutsideDomain`] off the domain and with
    /// [`Error::Unsupported`] when the image is not a product of intervals
    /// (for example normal cones at boundary points of a ball).
    pub fn evaluate(&self, x: &Vector) -> Result<Image> {
        x.check_dim(self.dim)?;
        if !self.domain.contains(x, MEMBERSHIP_TOL) {
            return Err(Error::OutsideDomain);
        }
        match &self.kind {
            OperatorKind::Affine(map) => Ok(Image::point(&map.apply(x))),
            OperatorKind::Subdifferential(f) => Ok(subdifferential_image(f, x)),
            OperatorKind::NormalCone(set) => normal_cone_image(set, x),
            OperatorKind::FromBifunction(f) => Ok(partial_image(f, x)?.minkowski_sum(&normal_cone_image(f.set(), x)?)),
            OperatorKind::Sum(a, b) => Ok(a.evaluate(x)?.minkowski_sum(&b.evaluate(x)?)),
        }
    }

    /// Tests `u in A x` with tolerance `tol`; `false` whenever `x` is off the domain.
    ///
    /// For `A_F` this is the sampled test `F(x, y) + <x - y, u> >= -tol` over
    /// 192 seeded points of `C` and 64 points near `x`. Other kinds compare
    /// against the exact image.
    pub fn contains(&self, x: &Vector, u: &Vector, tol: f64) -> bool {
        if x.dim() != self.dim || u.dim() != self.dim || !self.domain.contains(x, MEMBERSHIP_TOL) {
            return false;
        }
        match &self.kind {
            OperatorKind::FromBifunction(f) => {
                let local = local_probes(f.set(), x, &self.directions, &MEMBERSHIP_RADII);
                self.membership_sample
                    .iter()
                    .chain(local.iter())
                    .all(|y| f.eval(x, y) + (x - y).dot(u) >= -tol)
            }
            OperatorKind::NormalCone(set) => set.project(&(x + u)).distance(x) <= tol,
            OperatorKind::Sum(a, b) => match (a.evaluate(x), b.evaluate(x)) {
                (Ok(ia), Ok(ib)) => ia.minkowski_sum(&ib).contains(u, tol),
                (Ok(ia), Err(_)) if ia.is_point() => b.contains(x, &(u - &Vector::from(ia.lower())), tol),
                (Err(_), Ok(ib)) if ib.is_point() => a.contains(x, &(u - &Vector::from(ib.lower())), tol),
                _ => false,
            },
            _ => self.evaluate(x).map(|img| img.contains(u, tol)).unwrap_or(false),
        }
    }

    /// `J_{gamma A}` expressed through the bifunction whose operator is `A`,
    /// so operator and bifunction resolvents coincide exactly.
    pub fn resolvent(&self, gamma: f64) -> Result<ResolventOracle> {
        ResolventOracle::new(self.resolvent_bifunction()?, gamma)
    }

    fn resolvent_bifunction(&self) -> Result<Bifunction> {
        match &self.kind {
            OperatorKind::Affine(map) => Bifunction::operator_induced(self.domain.clone(), map.clone()),
            OperatorKind::Subdifferential(f) => Bifunction::function_difference(self.domain.clone(), f.clone()),
            OperatorKind::NormalCone(set) => Ok(Bifunction::zero(set.clone())),
            OperatorKind::FromBifunction(f) => Ok(f.clone()),
            OperatorKind::Sum(a, b) => {
                // B + N_C is the operator of <B x + c, y - x> on C
                match (&a.kind, &b.kind) {
                    (OperatorKind::Affine(map), OperatorKind::NormalCone(set))
                    | (OperatorKind::NormalCone(set), OperatorKind::Affine(map)) => {
                        Bifunction::operator_induced(set.clone(), map.clone())
                    }
                    _ => Err(Error::Unsupported("resolvent of a general operator sum".into())),
                }
            }
        }
    }

    /// Worst sampled violation of `<x - y, u - v> >= 0` over points of the
    /// domain, with `u`, `v` extreme points of the images.
    pub fn monotonicity_violation(&self, samples: usize, seed: u64) -> Result<f64> {
        let points = self.domain.sample_points(2 * samples, seed);
        let mut worst: f64 = 0.0;
        for pair in points.chunks_exact(2) {
            let (x, y) = (&pair[0], &pair[1]);
            let d = x - y;
            let u = self.evaluate(x)?.maximizer(&(-&d));
            let v = self.evaluate(y)?.maximizer(&d);
            let gap = d.dot(&(&u - &v));
            if gap.is_finite() {
                worst = worst.max(-gap);
            }
        }
        Ok(worst)
    }
}

/// `A_F` with domain `C`; its resolvent is exactly the bifunction resolvent.
pub fn operator_from_bifunction(f: &Bifunction) -> MonotoneOperator {
    MonotoneOperator::build(f.set().clone(), OperatorKind::FromBifunction(f.clone()))
}

/// `F_A(x, y) = max_{u in A x} <y - x, u>` on `set`.
///
/// Requires an evaluation oracle. The caller is responsible for `set` lying
/// in the interior of the domain of `A`; off-domain pairs evaluate to NaN.
pub fn bifunction_from_operator(a: &MonotoneOperator, set: &ConvexSet) -> Result<Bifunction> {
    if a.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: set.dim(),
        });
    }
    if !a.has_evaluate() {
        return Err(Error::Unsupported("operator has no evaluation oracle".into()));
    }
    Ok(Bifunction::from_operator(set.clone(), Arc::new(a.clone())))
}

fn family_has_partial(f: &Bifunction) -> bool {
    match f.family() {
        Family::Generic(_) => false,
        Family::FromOperator(op) => op.has_evaluate(),
        Family::Sum(a, b) => family_has_partial(a) && family_has_partial(b),
        _ => true,
    }
}

/// `d_y F(x, .)(x)` for the structured families.
fn partial_image(f: &Bifunction, x: &Vector) -> Result<Image> {
    match f.family() {
        Family::Zero => Ok(Image::zero(x.dim())),
        Family::OperatorInduced(map) => Ok(Image::point(&map.apply(x))),
        Family::FunctionDifference(g) => Ok(subdifferential_image(g, x)),
        Family::Sum(a, b) => Ok(partial_image(a, x)?.minkowski_sum(&partial_image(b, x)?)),
        Family::FromOperator(op) => op.evaluate(x),
        Family::Generic(_) => Err(Error::Unsupported(
            "evaluation of the operator of a generic bifunction".into(),
        )),
    }
}

fn subdifferential_image(f: &ConvexFunction, x: &Vector) -> Image {
    match f {
        ConvexFunction::WeightedL1 { weights } => {
            let (lo, hi) = x
                .iter()
                .zip(weights.iter())
                .map(|(&v, &w)| {
                    if v > 0.0 {
                        (w, w)
                    } else if v < 0.0 {
                        (-w, -w)
                    } else {
                        (-w, w)
                    }
                })
                .unzip();
            Image::product(lo, hi)
        }
        _ => Image::point(&f.subgradient(x)),
    }
}

fn normal_cone_image(set: &ConvexSet, x: &Vector) -> Result<Image> {
    if let Some((lo, hi)) = set.box_bounds() {
        let (cl, ch) = x
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(&v, (&l, &h))| {
                let at_lo = l.is_finite() && v <= l + BOUNDARY_TOL * l.abs().max(1.0);
                let at_hi = h.is_finite() && v >= h - BOUNDARY_TOL * h.abs().max(1.0);
                match (at_lo, at_hi) {
                    (true, true) => (f64::NEG_INFINITY, f64::INFINITY),
                    (true, false) => (f64::NEG_INFINITY, 0.0),
                    (false, true) => (0.0, f64::INFINITY),
                    (false, false) => (0.0, 0.0),
                }
            })
            .unzip();
        return Ok(Image::product(cl, ch));
    }
    if set.is_interior(x) {
        return Ok(Image::zero(x.dim()));
    }
    Err(Error::Unsupported(format!(
        "normal cone of a {} at a boundary point",
        set.kind_name()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvents::Resolvent;
    use nalgebra::DMatrix;

    fn line() -> ConvexSet {
        ConvexSet::whole_space(1).unwrap()
    }

    fn interval() -> ConvexSet {
        ConvexSet::cube(1, -1.0, 1.0).unwrap()
    }

    fn square_difference() -> Bifunction {
        let f = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap();
        Bifunction::function_difference(line(), f).unwrap()
    }

    #[test]
    fn membership_examples() {
        let a = operator_from_bifunction(&square_difference());
        let one = Vector::from([1.0]);
        assert!(a.contains(&one, &Vector::from([2.0]), 1e-8));
        assert!(!a.contains(&one, &Vector::from([1.9]), 1e-8));

        let n = operator_from_bifunction(&Bifunction::zero(interval()));
        assert!(n.contains(&one, &Vector::from([5.0]), 1e-8));
        assert!(!n.contains(&Vector::from([0.0]), &Vector::from([0.1]), 1e-8));
        assert!(!n.contains(&Vector::from([2.0]), &Vector::from([0.0]), 1e-8));
    }

    #[test]
    fn evaluate_matches_membership() {
        let a = operator_from_bifunction(&Bifunction::zero(interval()));
        let img = a.evaluate(&Vector::from([1.0])).unwrap();
        assert_eq!(img.lower(), &[0.0]);
        assert_eq!(img.upper(), &[f64::INFINITY]);
        assert!(matches!(a.evaluate(&Vector::from([1.5])), Err(Error::OutsideDomain)));
    }

    #[test]
    fn operator_bifunction_examples() {
        let a = MonotoneOperator::affine(AffineMap::linear(1, &[2.0]).unwrap()).unwrap();
        let f = bifunction_from_operator(&a, &line()).unwrap();
        for (x, y) in [(0.5, 2.0), (-1.0, 3.0), (0.0, 7.0)] {
            let expected = 2.0 * x * y - 2.0 * x * x;
            assert!((f.eval(&Vector::from([x]), &Vector::from([y])) - expected).abs() < 1e-12);
        }

        let n = MonotoneOperator::normal_cone(interval());
        let fa = bifunction_from_operator(&n, &interval()).unwrap();
        assert_eq!(fa.eval(&Vector::from([0.3]), &Vector::from([-0.8])), 0.0);
    }

    #[test]
    fn generic_operator_cannot_be_evaluated() {
        let g = Bifunction::generic(line(), "y^2 - x^2", |x, y| y[0] * y[0] - x[0] * x[0]);
        let a = operator_from_bifunction(&g);
        assert!(!a.has_evaluate());
        assert!(bifunction_from_operator(&a, &line()).is_err());
        // the sampled membership test still works
        assert!(a.contains(&Vector::from([1.0]), &Vector::from([2.0]), 1e-8));
    }

    #[test]
    fn resolvent_is_the_bifunction_resolvent() {
        let f = square_difference();
        let a = operator_from_bifunction(&f);
        let ja = a.resolvent(0.7).unwrap();
        let jf = ResolventOracle::new(f, 0.7).unwrap();
        for x in [-2.0, 0.1, 3.5] {
            let x = Vector::from([x]);
            assert_eq!(ja.resolve(&x).unwrap(), jf.resolve(&x).unwrap());
        }
    }

    #[test]
    fn sum_with_normal_cone() {
        let b =
            MonotoneOperator::affine(AffineMap::new(DMatrix::from_element(1, 1, 1.0), Vector::from([-2.0])).unwrap())
                .unwrap();
        let s = MonotoneOperator::sum(b, MonotoneOperator::normal_cone(interval())).unwrap();
        // at x = 1, B x = -1 and N_C(1) = [0, inf)
        assert!(s.contains(&Vector::from([1.0]), &Vector::from([-1.0]), 1e-12));
        assert!(s.contains(&Vector::from([1.0]), &Vector::from([3.0]), 1e-12));
        assert!(!s.contains(&Vector::from([1.0]), &Vector::from([-1.5]), 1e-12));
        let j = s.resolvent(1.0).unwrap();
        // (Id + B + N_C)^{-1}(0): 2 z - 2 = 0 projected on [-1, 1]
        assert_eq!(j.resolve(&Vector::from([0.0])).unwrap(), Vector::from([1.0]));
    }

    #[test]
    fn sampled_monotonicity() {
        let a = operator_from_bifunction(&square_difference());
        assert!(a.monotonicity_violation(100, 1).unwrap() <= 1e-10);
        let rot = MonotoneOperator::affine(AffineMap::linear(2, &[0.0, 1.0, -1.0, 0.0]).unwrap()).unwrap();
        assert!(rot.monotonicity_violation(100, 2).unwrap() <= 1e-10);
    }
}
