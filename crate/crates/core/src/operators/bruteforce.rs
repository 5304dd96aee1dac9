//! Grid scans that approximate `zer(A + B)` and the solution set of an
//! equilibrium problem on boxes of dimension one or two.
//!
//! Both scans compute a nonnegative defect per grid point and keep the points
//! whose defect is within grid resolution of zero: at most
//! `SLACK_STEPS * step`, and no larger than the largest decrease of the
//! defect towards an axis neighbour (or, at a local minimum, the largest
//! increase). The second bound is what keeps the accepted set a few grid
//! steps wide around isolated solutions.

use rayon::prelude::*;

use super::{MonotoneOperator, OperatorKind};
use crate::bifunctions::Bifunction;
use crate::error::{Error, Result};
use crate::hilbert::{ConvexSet, Vector, MEMBERSHIP_TOL};

/// Bound on `|u_i|` when searching for `u in A x` with `-u in B x`.
pub const DEFAULT_U_BOUND: f64 = 10.0;
/// Absolute cap on accepted defects, in grid steps.
pub const SLACK_STEPS: f64 = 10.0;

const BISECTION_STEPS: usize = 60;
const LOCAL_PROBE_STEPS: isize = 3;
const COARSE_PROBES_PER_AXIS: usize = 20;

/// A regular grid on a box in R or R^2.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    step: f64,
    u_bound: f64,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, step: f64) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        if lo.is_empty() || lo.len() > 2 {
            return Err(Error::Unsupported(format!(
                "brute-force grids are limited to dimension 1 or 2, got {}",
                lo.len()
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid step must be positive, got {step}"
            )));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid bounds".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::EmptyGrid);
        }
        Ok(GridSpec {
            lo,
            hi,
            step,
            u_bound: DEFAULT_U_BOUND,
        })
    }

    pub fn interval(lo: f64, hi: f64, step: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi], step)
    }

    pub fn with_u_bound(mut self, bound: f64) -> Self {
        self.u_bound = bound;
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn u_bound(&self) -> f64 {
        self.u_bound
    }

    fn counts(&self) -> Vec<usize> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| ((h - l) / self.step + 1e-9).floor() as usize + 1)
            .collect()
    }

    fn coordinate(&self, axis: usize, i: usize, count: usize) -> f64 {
        let v = self.lo[axis] + i as f64 * self.step;
        if i + 1 == count && (v - self.hi[axis]).abs() < 1e-6 * self.step {
            self.hi[axis]
        } else {
            v
        }
    }

    /// Grid points in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<Vector> {
        let counts = self.counts();
        match counts.as_slice() {
            [n] => (0..*n).map(|i| Vector::from([self.coordinate(0, i, *n)])).collect(),
            [n0, n1] => (0..*n0)
                .flat_map(|i| {
                    (0..*n1).map(move |j| Vector::from([self.coordinate(0, i, *n0), self.coordinate(1, j, *n1)]))
                })
                .collect(),
            _ => unreachable!("grid dimension is validated at construction"),
        }
    }

    fn multi_index(&self, idx: usize, counts: &[usize]) -> Vec<usize> {
        match counts {
            [_] => vec![idx],
            [_, n1] => vec![idx / n1, idx % n1],
            _ => unreachable!(),
        }
    }

    fn flat_index(&self, multi: &[isize], counts: &[usize]) -> Option<usize> {
        if multi.iter().zip(counts).any(|(&m, &n)| m < 0 || m as usize >= n) {
            return None;
        }
        Some(match counts {
            [_] => multi[0] as usize,
            [_, n1] => multi[0] as usize * n1 + multi[1] as usize,
            _ => unreachable!(),
        })
    }

    fn neighbors(&self, idx: usize, counts: &[usize]) -> Vec<usize> {
        let m: Vec<isize> = self.multi_index(idx, counts).iter().map(|&v| v as isize).collect();
        let mut out = Vec::with_capacity(2 * counts.len());
        for axis in 0..counts.len() {
            for delta in [-1, 1] {
                let mut n = m.clone();
                n[axis] += delta;
                out.extend(self.flat_index(&n, counts));
            }
        }
        out
    }
}

/// Grid points `x` for which some `u` with `|u_i| <= u_bound` satisfies
/// `u in A x` and `-u in B x`, up to grid resolution.
///
/// Each operator contributes linear constraints on `u`: interval bounds from
/// its image when it can be evaluated, and the sampled inequalities
/// `F(x, y) + <x - y, u> >= 0` over grid probes `y` for `A_F`. The defect at
/// `x` is the smallest uniform relaxation of these (unit-normal) constraints
/// that makes them jointly feasible.
pub fn zeros_bruteforce(a: &MonotoneOperator, b: &MonotoneOperator, grid: &GridSpec) -> Result<Vec<Vector>> {
    check_grid(grid, a.dim())?;
    check_grid(grid, b.dim())?;
    let counts = grid.counts();
    let points = grid.points();
    let defects: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|idx| -> Result<f64> {
            let x = &points[idx];
            let (Some(ca), Some(cb)) = (
                constraints(a, x, idx, grid, &points, &counts)?,
                constraints(b, x, idx, grid, &points, &counts)?,
            ) else {
                return Ok(f64::INFINITY);
            };
            let mut all = ca;
            all.extend(cb.into_iter().map(|(n, r)| (-&n, r)));
            Ok(min_relaxation(&all, grid.dim(), grid.u_bound, defect_ceiling(grid)))
        })
        .collect::<Result<_>>()?;
    if defects.iter().all(|d| d.is_infinite()) {
        return Err(Error::EmptyGrid);
    }
    Ok(select(grid, &counts, &points, &defects))
}

/// Grid points `x` of `C` with `min_y F(x, y) >= -slack` over grid points `y` of `C`.
pub fn equilibrium_bruteforce(f: &Bifunction, grid: &GridSpec) -> Result<Vec<Vector>> {
    check_grid(grid, f.dim())?;
    let counts = grid.counts();
    let points = grid.points();
    let set = f.set();
    let inside: Vec<bool> = points.iter().map(|p| set.contains(p, MEMBERSHIP_TOL)).collect();
    if !inside.iter().any(|&b| b) {
        return Err(Error::EmptyGrid);
    }
    let probes: Vec<&Vector> = points.iter().zip(&inside).filter(|(_, &i)| i).map(|(p, _)| p).collect();
    let defects: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|idx| {
            if !inside[idx] {
                return f64::INFINITY;
            }
            let x = &points[idx];
            let ceiling = defect_ceiling(grid);
            let mut defect: f64 = 0.0;
            for y in &probes {
                let value = f.eval(x, y);
                if value.is_nan() {
                    return f64::INFINITY;
                }
                defect = defect.max(-value);
                if defect >= ceiling {
                    return ceiling;
                }
            }
            defect
        })
        .collect();
    Ok(select(grid, &counts, &points, &defects))
}

/// Symmetric Hausdorff distance between two finite point sets (`inf` when
/// exactly one is empty).
pub fn hausdorff(a: &[Vector], b: &[Vector]) -> f64 {
    fn directed(a: &[Vector], b: &[Vector]) -> f64 {
        a.iter()
            .map(|p| b.iter().map(|q| p.distance(q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => directed(a, b).max(directed(b, a)),
    }
}

fn check_grid(grid: &GridSpec, dim: usize) -> Result<()> {
    if grid.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: grid.dim(),
        });
    }
    Ok(())
}

/// Defects are only resolved up to twice the acceptance cap: a neighbour
/// clamped there still dominates any accepted defect, so selection is unchanged.
fn defect_ceiling(grid: &GridSpec) -> f64 {
    2.0 * SLACK_STEPS * grid.step
}

fn select(grid: &GridSpec, counts: &[usize], points: &[Vector], defects: &[f64]) -> Vec<Vector> {
    let cap = SLACK_STEPS * grid.step;
    (0..points.len())
        .filter(|&idx| {
            let d = defects[idx];
            if !d.is_finite() {
                return false;
            }
            let neighbors: Vec<f64> = grid.neighbors(idx, counts).into_iter().map(|nb| defects[nb]).collect();
            let descent = neighbors.iter().map(|&n| d - n).fold(0.0, f64::max);
            let variation = if descent > 0.0 {
                descent
            } else {
                // local minimum of the defect
                neighbors.iter().map(|&n| n - d).fold(0.0, f64::max)
            };
            d <= cap.min(variation * (1.0 + 1e-9) + 1e-14)
        })
        .map(|idx| points[idx].clone())
        .collect()
}

/// Constraints `<n, u> >= r` with unit `n` describing `u in A x`, or `None`
/// when `x` is outside the domain.
fn constraints(
    op: &MonotoneOperator,
    x: &Vector,
    idx: usize,
    grid: &GridSpec,
    points: &[Vector],
    counts: &[usize],
) -> Result<Option<Vec<(Vector, f64)>>> {
    if !op.domain().contains(x, MEMBERSHIP_TOL) {
        return Ok(None);
    }
    if let OperatorKind::FromBifunction(f) = op.kind() {
        let out = probe_indices(grid, idx, counts)
            .into_iter()
            .map(|j| &points[j])
            .filter(|y| op.domain().contains(y, MEMBERSHIP_TOL))
            .filter_map(|y| {
                let diff = x - y;
                let dist = diff.norm();
                (dist > 0.0).then(|| (&diff * (1.0 / dist), -f.eval(x, y) / dist))
            })
            .collect();
        return Ok(Some(out));
    }
    let image = match op.evaluate(x) {
        Ok(image) => image,
        Err(Error::OutsideDomain) => return Ok(None),
        Err(e) => return Err(e),
    };
    let d = x.dim();
    let mut out = Vec::with_capacity(2 * d);
    for i in 0..d {
        let (l, h) = (image.lower()[i], image.upper()[i]);
        if l.is_finite() {
            out.push((Vector::basis(d, i), l));
        }
        if h.is_finite() {
            out.push((-Vector::basis(d, i), -h));
        }
    }
    Ok(Some(out))
}

/// Every grid point in 1-D; in 2-D a local neighbourhood plus a coarse global lattice.
fn probe_indices(grid: &GridSpec, idx: usize, counts: &[usize]) -> Vec<usize> {
    let total: usize = counts.iter().product();
    if counts.len() == 1 {
        return (0..total).collect();
    }
    let center = grid.multi_index(idx, counts);
    let mut out = Vec::new();
    for di in -LOCAL_PROBE_STEPS..=LOCAL_PROBE_STEPS {
        for dj in -LOCAL_PROBE_STEPS..=LOCAL_PROBE_STEPS {
            let m = [center[0] as isize + di, center[1] as isize + dj];
            out.extend(grid.flat_index(&m, counts));
        }
    }
    let stride: Vec<usize> = counts
        .iter()
        .map(|&n| n.div_ceil(COARSE_PROBES_PER_AXIS).max(1))
        .collect();
    for i in (0..counts[0]).step_by(stride[0]).chain(std::iter::once(counts[0] - 1)) {
        for j in (0..counts[1]).step_by(stride[1]).chain(std::iter::once(counts[1] - 1)) {
            out.push(i * counts[1] + j);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Smallest `t >= 0` such that `<n_k, u> >= r_k - t` for all `k` has a
/// solution with `|u_i| <= bound`, or `ceiling` if that is smaller (2-D only).
fn min_relaxation(constraints: &[(Vector, f64)], dim: usize, bound: f64, ceiling: f64) -> f64 {
    if dim == 1 {
        let mut max_lower = f64::NEG_INFINITY;
        let mut min_upper = f64::INFINITY;
        for (n, r) in constraints {
            if n[0] > 0.0 {
                max_lower = max_lower.max(r / n[0]);
            } else if n[0] < 0.0 {
                min_upper = min_upper.min(r / n[0]);
            }
        }
        let mut t: f64 = 0.0;
        if max_lower.is_finite() && min_upper.is_finite() {
            t = t.max(0.5 * (max_lower - min_upper));
        }
        if max_lower.is_finite() {
            t = t.max(max_lower - bound);
        }
        if min_upper.is_finite() {
            t = t.max(-bound - min_upper);
        }
        return t;
    }
    // u = 0 is feasible once t >= max r
    let mut hi = constraints.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    if hi == 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    if feasible_polygon(constraints, bound, 0.0) {
        return 0.0;
    }
    if hi > ceiling {
        if !feasible_polygon(constraints, bound, ceiling) {
            return ceiling;
        }
        hi = ceiling;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if feasible_polygon(constraints, bound, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Clips the square `[-bound, bound]^2` by each half-plane `<n, u> >= r - t`.
fn feasible_polygon(constraints: &[(Vector, f64)], bound: f64, t: f64) -> bool {
    let mut poly: Vec<[f64; 2]> = vec![[-bound, -bound], [bound, -bound], [bound, bound], [-bound, bound]];
    for (n, r) in constraints {
        let level = r - t;
        let value = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1] - level;
        let mut next = Vec::with_capacity(poly.len() + 1);
        for k in 0..poly.len() {
            let p = poly[k];
            let q = poly[(k + 1) % poly.len()];
            let (vp, vq) = (value(&p), value(&q));
            if vp >= 0.0 {
                next.push(p);
            }
            if (vp >= 0.0) != (vq >= 0.0) {
                let s = vp / (vp - vq);
                next.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
            }
        }
        if next.is_empty() {
            return false;
        }
        poly = next;
    }
    true
}

/// Grid spanning a box set, for callers that scan the whole feasible region.
pub fn grid_for_box(set: &ConvexSet, step: f64) -> Result<GridSpec> {
    let (lo, hi) = set
        .box_bounds()
        .ok_or_else(|| Error::Unsupported(format!("grid over a {}", set.kind_name())))?;
    GridSpec::new(lo, hi, step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunctions::{AffineMap, ConvexFunction};
    use crate::operators::operator_from_bifunction;
    use nalgebra::DMatrix;

    fn affine_1d(slope: f64, offset: f64) -> MonotoneOperator {
        MonotoneOperator::affine(AffineMap::new(DMatrix::from_element(1, 1, slope), Vector::from([offset])).unwrap())
            .unwrap()
    }

    fn within(set: &[Vector], target: f64, steps: f64, h: f64) -> bool {
        !set.is_empty() && set.iter().all(|p| (p[0] - target).abs() <= steps * h + 1e-12)
    }

    #[test]
    fn zero_of_linear_map() {
        let h = 1e-3;
        let grid = GridSpec::interval(-2.0, 2.0, h).unwrap();
        let zeros = zeros_bruteforce(&affine_1d(2.0, 0.0), &affine_1d(0.0, 0.0), &grid).unwrap();
        assert!(within(&zeros, 0.0, 1.0, h), "{zeros:?}");
    }

    #[test]
    fn normal_cone_plus_shift() {
        let h = 1e-3;
        let grid = GridSpec::interval(-2.0, 2.0, h).unwrap();
        let n = MonotoneOperator::normal_cone(ConvexSet::cube(1, -1.0, 1.0).unwrap());
        let zeros = zeros_bruteforce(&n, &affine_1d(1.0, -2.0), &grid).unwrap();
        assert!(within(&zeros, 1.0, 1.0, h), "{zeros:?}");

        let n13 = MonotoneOperator::normal_cone(ConvexSet::cube(1, 1.0, 3.0).unwrap());
        let zeros = zeros_bruteforce(&affine_1d(2.0, 0.0), &n13, &grid).unwrap();
        assert!(within(&zeros, 1.0, 1.0, h), "{zeros:?}");
    }

    #[test]
    fn equilibrium_examples() {
        let h = 1e-3;
        let q = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap();
        let f = Bifunction::function_difference(ConvexSet::cube(1, -1.0, 1.0).unwrap(), q).unwrap();
        let grid = GridSpec::interval(-1.0, 1.0, h).unwrap();
        assert!(within(&equilibrium_bruteforce(&f, &grid).unwrap(), 0.0, 2.0, h));

        let zero = Bifunction::zero(ConvexSet::cube(1, -1.0, 1.0).unwrap());
        let all = equilibrium_bruteforce(&zero, &GridSpec::interval(-1.0, 1.0, 0.1).unwrap()).unwrap();
        assert_eq!(all.len(), 21);

        let vi = Bifunction::operator_induced(
            ConvexSet::cube(1, 1.0, 3.0).unwrap(),
            AffineMap::linear(1, &[2.0]).unwrap(),
        )
        .unwrap();
        let sol = equilibrium_bruteforce(&vi, &GridSpec::interval(1.0, 3.0, h).unwrap()).unwrap();
        assert!(within(&sol, 1.0, 2.0, h), "{sol:?}");
    }

    #[test]
    fn sampled_operator_zeros_match_equilibria() {
        let h = 1e-3;
        let q = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap();
        let line = ConvexSet::whole_space(1).unwrap();
        let f = Bifunction::function_difference(line.clone(), q).unwrap();
        let g = Bifunction::operator_induced(line, AffineMap::new(DMatrix::zeros(1, 1), Vector::from([1.0])).unwrap())
            .unwrap();
        let grid = GridSpec::interval(-2.0, 2.0, h).unwrap();
        let zeros = zeros_bruteforce(&operator_from_bifunction(&f), &operator_from_bifunction(&g), &grid).unwrap();
        let eq = equilibrium_bruteforce(&crate::bifunctions::sum(&f, &g).unwrap(), &grid).unwrap();
        assert!(within(&zeros, -0.5, 2.0, h), "{zeros:?}");
        assert!(hausdorff(&zeros, &eq) <= 2.0 * h);
    }

    #[test]
    fn two_dimensional_scan() {
        // <x - (0.5, 2), y - x> on [0, 1]^2 solves at (0.5, 1)
        let set = ConvexSet::cube(2, 0.0, 1.0).unwrap();
        let map = AffineMap::new(DMatrix::identity(2, 2), Vector::from([-0.5, -2.0])).unwrap();
        let f = Bifunction::operator_induced(set.clone(), map).unwrap();
        let h = 0.05;
        let grid = grid_for_box(&set, h).unwrap();
        let target = Vector::from([0.5, 1.0]);
        let eq = equilibrium_bruteforce(&f, &grid).unwrap();
        assert!(
            !eq.is_empty() && eq.iter().all(|p| p.distance(&target) <= 2.0 * h),
            "{eq:?}"
        );
        let zeros = zeros_bruteforce(
            &operator_from_bifunction(&f),
            &MonotoneOperator::normal_cone(set),
            &grid,
        )
        .unwrap();
        assert!(
            !zeros.is_empty() && zeros.iter().all(|p| p.distance(&target) <= 2.0 * h),
            "{zeros:?}"
        );
    }

    #[test]
    fn empty_grid_is_an_error() {
        assert!(matches!(GridSpec::interval(1.0, 0.0, 0.1), Err(Error::EmptyGrid)));
        let f = Bifunction::zero(ConvexSet::cube(1, 5.0, 6.0).unwrap());
        let grid = GridSpec::interval(0.0, 1.0, 0.1).unwrap();
        assert!(matches!(equilibrium_bruteforce(&f, &grid), Err(Error::EmptyGrid)));
    }
}
