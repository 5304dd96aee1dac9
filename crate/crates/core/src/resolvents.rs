//! Resolvents `J_{gamma F}` and reflections `R_{gamma F} = 2 J_{gamma F} - Id`
//! of bifunctions.
//!
//! `J_{gamma F} x` is the unique `z` in `C` with
//! `gamma F(z, y) + <z - x, y - z> >= 0` for every `y` in `C`. Closed forms
//! are used whenever the declared family allows one; everything else goes
//! through [`inner_solve`], a projected (sub)gradient iteration on the
//! 1-strongly monotone variational inequality that characterizes `z`.

use nalgebra::DMatrix;

use crate::bifunctions::{Bifunction, Family};
use crate::error::{Error, Result};
use crate::hilbert::{local_probes, unit_directions, ConvexSet, Vector};

pub const DEFAULT_INNER_TOL: f64 = 1e-9;
pub const DEFAULT_INNER_MAX_ITER: usize = 50_000;
/// Number of global verification points for the inner stopping test.
pub const VERIFICATION_SAMPLES: usize = 64;
/// Initial step of the inner iteration; halved whenever the iteration stops contracting.
pub const INNER_STEP: f64 = 0.5;
pub const DEFAULT_VERIFICATION_SEED: u64 = 0x5eed_0001;

const LOCAL_RADII: [f64; 3] = [1e-1, 1e-3, 1e-6];
const MIN_INNER_STEP: f64 = 1e-14;
const KINK_HALVINGS: u32 = 12;

/// Anything that maps `x` to a resolvent `J_{gamma T} x`.
pub trait Resolvent: Send + Sync {
    fn gamma(&self) -> f64;

    fn dim(&self) -> usize;

    fn resolve(&self, x: &Vector) -> Result<Vector>;

    /// `2 J x - x`.
    fn reflect(&self, x: &Vector) -> Result<Vector> {
        let j = self.resolve(x)?;
        Ok(&(&j * 2.0) - x)
    }
}

/// How a [`ResolventOracle`] computes its output.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResolventMethod {
    /// `F = 0`: projection onto `C`.
    ClosedFormProjection,
    /// Operator-induced `F` with affine `B`: `(Id + gamma B) z = x - gamma c`
    /// on the whole space, or a clamped per-coordinate solve for diagonal
    /// `B` on a box.
    ClosedFormLinearSolve,
    /// `F(x, y) = f(y) - f(x)`: `prox_{iota_C + gamma f}`.
    ProxComposition,
    /// `F(x, y) = f(y) - f(x)` on a set where the constrained prox has no
    /// closed form: Dykstra-type alternation of `P_C` and `prox_{gamma f}`.
    ProxSplitting,
    /// [`inner_solve`].
    InnerIterative,
}

#[derive(Clone, Debug)]
enum LinearPlan {
    Full { inverse: DMatrix<f64> },
    DiagonalClamp { lo: Vec<f64>, hi: Vec<f64> },
}

/// `J_{gamma F}` for a fixed bifunction and step size.
#[derive(Clone, Debug)]
pub struct ResolventOracle {
    gamma: f64,
    bifunction: Bifunction,
    method: ResolventMethod,
    inner_tol: f64,
    inner_max_iter: usize,
    linear: Option<LinearPlan>,
    verification: Vec<Vector>,
    directions: Vec<Vector>,
}

impl ResolventOracle {
    /// Picks the cheapest exact method available for the bifunction's family.
    pub fn new(bifunction: Bifunction, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be in (0, inf), got {gamma}"
            )));
        }
        let method = preferred_method(&bifunction);
        let set = bifunction.set();
        let verification = set.sample_points(VERIFICATION_SAMPLES, DEFAULT_VERIFICATION_SEED);
        let directions = unit_directions(set.dim(), 8, DEFAULT_VERIFICATION_SEED);
        let mut oracle = ResolventOracle {
            gamma,
            bifunction,
            method,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max_iter: DEFAULT_INNER_MAX_ITER,
            linear: None,
            verification,
            directions,
        };
        oracle.linear = oracle.linear_plan();
        Ok(oracle)
    }

    /// Forces a method. Closed forms that do not apply to the family are rejected.
    pub fn with_method(mut self, method: ResolventMethod) -> Result<Self> {
        let ok = match method {
            ResolventMethod::InnerIterative => true,
            ResolventMethod::ClosedFormProjection => self.bifunction.is_zero(),
            ResolventMethod::ClosedFormLinearSolve => {
                self.method = method;
                self.linear_plan().is_some()
            }
            ResolventMethod::ProxComposition => match self.bifunction.family() {
                Family::FunctionDifference(f) => f.has_closed_form_prox(self.bifunction.set()),
                _ => false,
            },
            ResolventMethod::ProxSplitting => matches!(self.bifunction.family(), Family::FunctionDifference(_)),
        };
        if !ok {
            return Err(Error::Unsupported(format!(
                "{method:?} is not available for a {} bifunction on a {} set",
                self.bifunction.family_name(),
                self.bifunction.set().kind_name()
            )));
        }
        self.method = method;
        self.linear = self.linear_plan();
        Ok(self)
    }

    pub fn with_inner(mut self, tol: f64, max_iter: usize) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidParameter(format!(
                "inner tolerance must be positive and max_iter >= 1 (got {tol}, {max_iter})"
            )));
        }
        self.inner_tol = tol;
        self.inner_max_iter = max_iter;
        Ok(self)
    }

    pub fn method(&self) -> ResolventMethod {
        self.method
    }

    pub fn bifunction(&self) -> &Bifunction {
        &self.bifunction
    }

    pub fn inner_tol(&self) -> f64 {
        self.inner_tol
    }

    fn linear_plan(&self) -> Option<LinearPlan> {
        if self.method != ResolventMethod::ClosedFormLinearSolve {
            return None;
        }
        let Family::OperatorInduced(map) = self.bifunction.family() else {
            return None;
        };
        let set = self.bifunction.set();
        let d = map.dim();
        if set.is_whole_space() {
            let system = DMatrix::<f64>::identity(d, d) + map.matrix() * self.gamma;
            return system.try_inverse().map(|inverse| LinearPlan::Full { inverse });
        }
        let (lo, hi) = set.box_bounds()?;
        let diagonal_ok = map.is_diagonal() && (0..d).all(|i| 1.0 + self.gamma * map.matrix()[(i, i)] > 0.0);
        diagonal_ok.then_some(LinearPlan::DiagonalClamp { lo, hi })
    }

    /// `max_y -(gamma F(z, y) + <z - x, y - z>)` over the verification sample
    /// and a few points near `z`; nonpositive when `z = J_{gamma F} x`.
    pub fn residual(&self, x: &Vector, z: &Vector) -> f64 {
        let set = self.bifunction.set();
        let local = local_probes(set, z, &self.directions, &LOCAL_RADII);
        let shift = z - x;
        self.verification
            .iter()
            .chain(local.iter())
            .map(|y| -(self.gamma * self.bifunction.eval(z, y) + shift.dot(&(y - z))))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn closed_form(&self, x: &Vector) -> Option<Vector> {
        let set = self.bifunction.set();
        match (self.method, self.bifunction.family()) {
            (ResolventMethod::ClosedFormProjection, _) => Some(set.project(x)),
            (ResolventMethod::ClosedFormLinearSolve, Family::OperatorInduced(map)) => {
                let rhs = x.axpy(-self.gamma, map.offset());
                match self.linear.as_ref()? {
                    LinearPlan::Full { inverse } => Some(Vector::from_dvector(&(inverse * rhs.to_dvector()))),
                    LinearPlan::DiagonalClamp { lo, hi } => Some(
                        (0..x.dim())
                            .map(|i| {
                                let z = rhs[i] / (1.0 + self.gamma * map.matrix()[(i, i)]);
                                z.max(lo[i]).min(hi[i])
                            })
                            .collect::<Vec<_>>()
                            .into(),
                    ),
                }
            }
            (ResolventMethod::ProxComposition, Family::FunctionDifference(f)) => f.constrained_prox(set, self.gamma, x),
            _ => None,
        }
    }

    fn iterate(&self, x: &Vector) -> Result<Vector> {
        run_inner(
            &self.bifunction,
            self.gamma,
            x,
            self.inner_tol,
            self.inner_max_iter,
            |z| self.residual(x, z),
        )
    }

    /// Dykstra-like proximal splitting for `prox_{iota_C + gamma f}`:
    /// `y = P_C(u + p)`, `p <- u + p - y`, `u <- prox_{gamma f}(y + q)`,
    /// `q <- y + q - u`. Both `y` and `u` converge to the constrained prox.
    fn split(&self, x: &Vector) -> Result<Vector> {
        let Family::FunctionDifference(f) = self.bifunction.family() else {
            return Err(Error::Unsupported(
                "prox splitting needs a function-difference bifunction".into(),
            ));
        };
        let set = self.bifunction.set();
        let space = ConvexSet::whole_space(set.dim())?;
        let prox = |v: &Vector| {
            f.constrained_prox(&space, self.gamma, v)
                .ok_or_else(|| Error::Unsupported("prox of the function has no closed form".into()))
        };
        let mut u = x.clone();
        let (mut p, mut q) = (Vector::zeros(x.dim()), Vector::zeros(x.dim()));
        let mut y_prev: Option<Vector> = None;
        for _ in 0..self.inner_max_iter {
            let shifted = &u + &p;
            let y = set.project(&shifted);
            p = &shifted - &y;
            let lifted = &y + &q;
            u = prox(&lifted)?;
            q = &lifted - &u;
            let moved = y_prev.as_ref().map_or(f64::INFINITY, |prev| prev.distance(&y));
            if moved.max(u.distance(&y)) <= self.inner_tol && self.residual(x, &y) <= self.inner_tol {
                return Ok(y);
            }
            y_prev = Some(y);
        }
        let last = y_prev.unwrap_or_else(|| set.project(x));
        Err(Error::InnerSolve {
            iterations: self.inner_max_iter,
            residual: self.residual(x, &last),
            last,
        })
    }
}

impl Resolvent for ResolventOracle {
    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn dim(&self) -> usize {
        self.bifunction.dim()
    }

    fn resolve(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim())?;
        if !x.is_finite() {
            return Err(Error::NonFinite("resolvent argument".into()));
        }
        match self.method {
            ResolventMethod::InnerIterative => self.iterate(x),
            ResolventMethod::ProxSplitting => self.split(x),
            _ => self
                .closed_form(x)
                .ok_or_else(|| Error::Unsupported(format!("{:?} closed form unavailable", self.method))),
        }
    }
}

fn preferred_method(f: &Bifunction) -> ResolventMethod {
    match f.family() {
        Family::Zero => ResolventMethod::ClosedFormProjection,
        Family::OperatorInduced(map) => {
            let set = f.set();
            if set.is_whole_space() || (map.is_diagonal() && set.box_bounds().is_some()) {
                ResolventMethod::ClosedFormLinearSolve
            } else {
                ResolventMethod::InnerIterative
            }
        }
        Family::FunctionDifference(g) if g.has_closed_form_prox(f.set()) => ResolventMethod::ProxComposition,
        Family::FunctionDifference(_) => ResolventMethod::ProxSplitting,
        _ => ResolventMethod::InnerIterative,
    }
}

/// `J_{gamma F} x` by projected (sub)gradient steps
/// `z <- P_C(z - sigma (gamma w + z - x))`, with `w` a subgradient of
/// `F(z, .)` at `z`.
///
/// The step starts at 0.5 and is halved whenever successive displacements
/// stop shrinking. The run stops once the contraction-based error estimate and
/// the sampled equilibrium residual are both below `tol`. Once the step has
/// been halved many times (nonsmooth `F(z, .)`), a displacement below `tol`
/// replaces the contraction estimate.
pub fn inner_solve(f: &Bifunction, gamma: f64, x: &Vector, tol: f64, max_iter: usize) -> Result<Vector> {
    ResolventOracle::new(f.clone(), gamma)?
        .with_method(ResolventMethod::InnerIterative)?
        .with_inner(tol, max_iter)?
        .resolve(x)
}

fn run_inner(
    f: &Bifunction,
    gamma: f64,
    x: &Vector,
    tol: f64,
    max_iter: usize,
    residual: impl Fn(&Vector) -> f64,
) -> Result<Vector> {
    let set = f.set();
    let step = |z: &Vector, sigma: f64| -> Vector {
        let w = f.subgradient_y(z, z);
        let direction = &(&w * gamma) + &(z - x);
        set.project(&z.axpy(-sigma, &direction))
    };

    let mut sigma = INNER_STEP;
    let mut halvings = 0;
    let mut z = set.project(x);
    let mut next = step(&z, sigma);
    let mut prev_disp = next.distance(&z);
    let mut anchor = (z.clone(), prev_disp);
    if prev_disp == 0.0 && residual(&z) <= tol {
        return Ok(z);
    }

    for _ in 1..max_iter {
        z = next;
        next = step(&z, sigma);
        let disp = next.distance(&z);
        if disp == 0.0 && residual(&z) <= tol {
            return Ok(z);
        }
        // after many halvings the iteration is chattering around a kink,
        // where the displacement itself bounds the distance to the solution
        if halvings >= KINK_HALVINGS && disp <= tol && residual(&next) <= tol {
            return Ok(next);
        }
        let ratio = disp / prev_disp;
        if !ratio.is_finite() || ratio >= 1.0 {
            sigma *= 0.5;
            halvings += 1;
            if sigma < MIN_INNER_STEP {
                break;
            }
            z = anchor.0.clone();
            next = step(&z, sigma);
            prev_disp = next.distance(&z);
            anchor.1 = prev_disp;
            continue;
        }
        if disp < anchor.1 {
            anchor = (z.clone(), disp);
        }
        let error_bound = disp / (1.0 - ratio);
        if error_bound <= tol && residual(&next) <= tol {
            return Ok(next);
        }
        prev_disp = disp;
    }
    let res = residual(&next);
    Err(Error::InnerSolve {
        iterations: max_iter,
        residual: res,
        last: next,
    })
}
