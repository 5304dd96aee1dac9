//! The relaxed, inexact Douglas–Rachford iteration
//!
//! ```text
//! y_n     = J_{gamma G} x_n + b_n
//! z_n     = J_{gamma F}(2 y_n - x_n) + a_n
//! x_{n+1} = x_n + lambda_n (z_n - y_n)
//! ```
//!
//! The governing sequence `x_n` converges to a fixed point `x` of
//! `R_{gamma F} R_{gamma G}` and `J_{gamma G} x` solves the equilibrium
//! problem for `F + G`. The same loop runs on operator resolvents.

mod km;
mod schedule;

pub use km::{km_iterate, reflection_composition};
pub use schedule::{ErrorSchedule, Relaxation, RelaxationRule};

use crate::bifunctions::{check_assumption1, Bifunction};
use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::operators::MonotoneOperator;
use crate::resolvents::{Resolvent, ResolventOracle, DEFAULT_INNER_MAX_ITER, DEFAULT_INNER_TOL};

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
pub const DEFAULT_CERTIFICATE_SAMPLES: usize = 256;
const DIAGNOSTIC_SAMPLES: usize = 64;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub gamma: f64,
    pub relaxation: Relaxation,
    /// Perturbation added after the `F` resolvent.
    pub error_a: ErrorSchedule,
    /// Perturbation added after the `G` resolvent.
    pub error_b: ErrorSchedule,
    pub max_iter: usize,
    pub residual_tol: f64,
    /// Record every `trace_every`-th iteration (the final one is always kept).
    pub trace_every: usize,
    /// Seed of the certificate sample and the assumption diagnostics.
    pub seed: u64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub certificate_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 1.0,
            relaxation: Relaxation::default(),
            error_a: ErrorSchedule::Zero,
            error_b: ErrorSchedule::Zero,
            max_iter: DEFAULT_MAX_ITER,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            trace_every: 1,
            seed: 0,
            inner_tol: DEFAULT_INNER_TOL,
            inner_max_iter: DEFAULT_INNER_MAX_ITER,
            certificate_samples: DEFAULT_CERTIFICATE_SAMPLES,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be in (0, inf), got {}",
                self.gamma
            )));
        }
        if !(self.residual_tol.is_finite() && self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "residual tolerance must be positive, got {}",
                self.residual_tol
            )));
        }
        if self.max_iter == 0 || self.trace_every == 0 {
            return Err(Error::InvalidParameter(
                "max_iter and trace_every must be at least 1".into(),
            ));
        }
        self.error_a.validate()?;
        self.error_b.validate()?;
        Ok(())
    }

    /// Resolvent oracle for `bifunction` with this configuration's step and inner settings.
    pub fn oracle(&self, bifunction: Bifunction) -> Result<ResolventOracle> {
        ResolventOracle::new(bifunction, self.gamma)?.with_inner(self.inner_tol, self.inner_max_iter)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    InnerFailure,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::InnerFailure => "inner_failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    pub x: Vector,
    pub y: Vector,
    pub z: Vector,
    /// `|R_{gamma F} R_{gamma G} x_n - x_n|` with zero injected errors.
    pub residual_dr: f64,
    /// `|x_{n+1} - x_n|`; zero on the terminating record.
    pub step: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationTrace {
    records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// Last governing iterate.
    pub x_star: Vector,
    /// `J_{gamma G} x_star` recomputed without injected error: the reported solution.
    pub y_star: Vector,
    pub status: Status,
    /// Number of Douglas–Rachford steps evaluated.
    pub iterations: usize,
    pub trace: IterationTrace,
    /// `min_y F(y_star, y) + G(y_star, y)` over the seeded sample of `C`;
    /// `None` for operator-form runs.
    pub certificate: Option<f64>,
    pub final_residual: f64,
    /// Failed assumption diagnostics and similar non-fatal findings.
    pub warnings: Vec<String>,
    /// The resolvent error behind [`Status::InnerFailure`].
    pub failure: Option<Error>,
}

/// One Douglas–Rachford step; returns `(y_n, z_n, x_{n+1})`.
pub fn dr_step(
    x: &Vector,
    jf: &dyn Resolvent,
    jg: &dyn Resolvent,
    lambda: f64,
    a: &Vector,
    b: &Vector,
) -> Result<(Vector, Vector, Vector)> {
    check_pair(jf, jg)?;
    let y = &jg.resolve(x)? + b;
    let z = &jf.resolve(&(&(&y * 2.0) - x))? + a;
    let next = x.axpy(lambda, &(&z - &y));
    Ok((y, z, next))
}

/// `|R_{gamma F}(R_{gamma G} x) - x|`.
pub fn residual_dr(x: &Vector, jf: &dyn Resolvent, jg: &dyn Resolvent) -> Result<f64> {
    check_pair(jf, jg)?;
    let rg = jg.reflect(x)?;
    Ok(jf.reflect(&rg)?.distance(x))
}

fn check_pair(jf: &dyn Resolvent, jg: &dyn Resolvent) -> Result<()> {
    if jf.dim() != jg.dim() {
        return Err(Error::DimensionMismatch {
            expected: jf.dim(),
            found: jg.dim(),
        });
    }
    if jf.gamma() != jg.gamma() {
        return Err(Error::InvalidParameter(format!(
            "resolvents use different step sizes ({} and {})",
            jf.gamma(),
            jg.gamma()
        )));
    }
    Ok(())
}

/// `min_y F(point, y) + G(point, y)` over `samples` seeded points of the common set.
pub fn equilibrium_certificate(f: &Bifunction, g: &Bifunction, point: &Vector, samples: usize, seed: u64) -> f64 {
    f.set()
        .sample_points(samples, seed)
        .iter()
        .map(|y| f.eval(point, y) + g.eval(point, y))
        .fold(f64::INFINITY, f64::min)
}

/// Solves `find x in C with F(x, y) + G(x, y) >= 0 for all y in C`.
pub fn solve(f: &Bifunction, g: &Bifunction, x0: &Vector, cfg: &SolverConfig) -> Result<SolveResult> {
    if f.set() != g.set() {
        return Err(Error::SetMismatch);
    }
    cfg.validate()?;
    x0.check_dim(f.dim())?;
    let mut warnings = Vec::new();
    for (name, h) in [("F", f), ("G", g)] {
        match check_assumption1(h, DIAGNOSTIC_SAMPLES, cfg.seed) {
            Ok(report) if !report.passed => warnings.push(format!(
                "{name} fails the sampled monotone-bifunction diagnostics (worst violation {:.3e})",
                report.worst()
            )),
            Ok(_) => {}
            Err(e) => warnings.push(format!("{name} diagnostics aborted: {e}")),
        }
    }
    let jf = cfg.oracle(f.clone())?;
    let jg = cfg.oracle(g.clone())?;
    let mut result = iterate(&jf, &jg, x0, cfg)?;
    result.certificate = Some(equilibrium_certificate(
        f,
        g,
        &result.y_star,
        cfg.certificate_samples,
        cfg.seed,
    ));
    result.warnings.splice(0..0, warnings);
    Ok(result)
}

/// The same iteration on operator resolvents: `J_{gamma A}` in place of
/// `J_{gamma F}` and `J_{gamma B}` in place of `J_{gamma G}`; the limit
/// `J_{gamma B} x` is a zero of `A + B`.
pub fn solve_operators(
    a: &MonotoneOperator,
    b: &MonotoneOperator,
    x0: &Vector,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    x0.check_dim(a.dim())?;
    let ja = a.resolvent(cfg.gamma)?.with_inner(cfg.inner_tol, cfg.inner_max_iter)?;
    let jb = b.resolvent(cfg.gamma)?.with_inner(cfg.inner_tol, cfg.inner_max_iter)?;
    iterate(&ja, &jb, x0, cfg)
}

/// Runs the iteration on arbitrary resolvents.
pub fn iterate(jf: &dyn Resolvent, jg: &dyn Resolvent, x0: &Vector, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    check_pair(jf, jg)?;
    x0.check_dim(jf.dim())?;
    let dim = jf.dim();
    let clean = cfg.error_a.is_zero() && cfg.error_b.is_zero();
    let mut trace = IterationTrace::default();
    let mut x = x0.clone();
    let mut last_y: Option<Vector> = None;

    for n in 0..cfg.max_iter {
        let a = cfg.error_a.at(n, dim);
        let b = cfg.error_b.at(n, dim);
        let lambda = cfg.relaxation.at(n);
        let step = dr_step(&x, jf, jg, lambda, &a, &b).and_then(|(y, z, next)| {
            let residual = if clean {
                2.0 * z.distance(&y)
            } else {
                residual_dr(&x, jf, jg)?
            };
            Ok((y, z, next, residual))
        });
        let (y, z, next, residual) = match step {
            Ok(v) => v,
            Err(e) => {
                let y_star = last_y.unwrap_or_else(|| x.clone());
                return Ok(SolveResult {
                    x_star: x,
                    y_star,
                    status: Status::InnerFailure,
                    iterations: n,
                    trace,
                    certificate: None,
                    final_residual: f64::NAN,
                    warnings: Vec::new(),
                    failure: Some(Error::Resolvent {
                        iteration: n,
                        source: Box::new(e),
                    }),
                });
            }
        };
        let converged = residual <= cfg.residual_tol;
        let last = converged || n + 1 == cfg.max_iter;
        if n % cfg.trace_every == 0 || last {
            trace.push(TraceRecord {
                n,
                x: x.clone(),
                y: y.clone(),
                z,
                residual_dr: residual,
                step: if converged { 0.0 } else { next.distance(&x) },
            });
        }
        if last {
            let status = if converged { Status::Converged } else { Status::MaxIter };
            let x_star = if converged { x } else { next };
            return finish(jf, jg, x_star, status, n + 1, trace, residual, clean);
        }
        last_y = Some(y);
        x = next;
    }
    unreachable!("max_iter >= 1 is validated")
}

#[allow(clippy::too_many_arguments)]
fn finish(
    jf: &dyn Resolvent,
    jg: &dyn Resolvent,
    x_star: Vector,
    status: Status,
    iterations: usize,
    trace: IterationTrace,
    residual: f64,
    clean: bool,
) -> Result<SolveResult> {
    let failed = |e: Error| SolveResult {
        x_star: x_star.clone(),
        y_star: x_star.clone(),
        status: Status::InnerFailure,
        iterations,
        trace: trace.clone(),
        certificate: None,
        final_residual: f64::NAN,
        warnings: Vec::new(),
        failure: Some(Error::Resolvent {
            iteration: iterations,
            source: Box::new(e),
        }),
    };
    let y_star = match jg.resolve(&x_star) {
        Ok(y) => y,
        Err(e) => return Ok(failed(e)),
    };
    let final_residual = if status == Status::Converged && clean {
        residual
    } else {
        match residual_dr(&x_star, jf, jg) {
            Ok(r) => r,
            Err(e) => return Ok(failed(e)),
        }
    };
    Ok(SolveResult {
        x_star,
        y_star,
        status,
        iterations,
        trace,
        certificate: None,
        final_residual,
        warnings: Vec::new(),
        failure: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifunctions::{AffineMap, ConvexFunction};
    use crate::hilbert::ConvexSet;
    use nalgebra::DMatrix;

    fn line() -> ConvexSet {
        ConvexSet::whole_space(1).unwrap()
    }

    fn interval() -> ConvexSet {
        ConvexSet::cube(1, -1.0, 1.0).unwrap()
    }

    fn oracle(f: Bifunction) -> ResolventOracle {
        ResolventOracle::new(f, 1.0).unwrap()
    }

    #[test]
    fn step_examples() {
        let zero = oracle(Bifunction::zero(line()));
        let x = Vector::from([0.3]);
        let (y, z, next) = dr_step(&x, &zero, &zero, 1.7, &Vector::zeros(1), &Vector::zeros(1)).unwrap();
        assert_eq!((y, z, next), (x.clone(), x.clone(), x));

        let p = oracle(Bifunction::zero(interval()));
        let zeros = Vector::zeros(1);
        let (y, z, next) = dr_step(&Vector::from([3.0]), &p, &p, 1.0, &zeros, &zeros).unwrap();
        assert_eq!((y[0], z[0], next[0]), (1.0, -1.0, 1.0));

        let lin = oracle(Bifunction::operator_induced(line(), AffineMap::linear(1, &[2.0]).unwrap()).unwrap());
        let zero = oracle(Bifunction::zero(line()));
        let (y, z, next) = dr_step(&Vector::from([1.0]), &lin, &zero, 1.0, &zeros, &zeros).unwrap();
        assert_eq!(y[0], 1.0);
        assert!((z[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((next[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn residual_examples() {
        let p = oracle(Bifunction::zero(interval()));
        assert_eq!(residual_dr(&Vector::from([3.0]), &p, &p).unwrap(), 4.0);
        assert_eq!(residual_dr(&Vector::from([0.5]), &p, &p).unwrap(), 0.0);
        let id = oracle(Bifunction::zero(line()));
        assert_eq!(residual_dr(&Vector::from([-7.0]), &id, &id).unwrap(), 0.0);
    }

    #[test]
    fn pure_feasibility_converges_in_three_steps() {
        let c = ConvexSet::cube(2, -1.0, 1.0).unwrap();
        let f = Bifunction::zero(c.clone());
        let result = solve(&f, &f, &Vector::from([5.0, 5.0]), &SolverConfig::default()).unwrap();
        assert_eq!(result.status, Status::Converged);
        assert_eq!(result.y_star, Vector::from([1.0, 1.0]));
        assert!(result.iterations <= 3);
        assert!(result.final_residual < 1e-12);
        assert_eq!(result.trace.len(), result.iterations);
    }

    #[test]
    fn quadratic_plus_linear() {
        let q = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap();
        let f = Bifunction::function_difference(line(), q).unwrap();
        let g = Bifunction::operator_induced(
            line(),
            AffineMap::new(DMatrix::zeros(1, 1), Vector::from([1.0])).unwrap(),
        )
        .unwrap();
        let result = solve(&f, &g, &Vector::from([3.0]), &SolverConfig::default()).unwrap();
        assert_eq!(result.status, Status::Converged);
        assert!((result.y_star[0] + 0.5).abs() < 1e-7, "{:?}", result.y_star);
        assert!(result.certificate.unwrap() >= -1e-7);
        assert!(result.warnings.is_empty(), "{:?}", result.warnings);
    }

    #[test]
    fn mixed_equilibrium_example() {
        let f = Bifunction::operator_induced(
            interval(),
            AffineMap::new(DMatrix::from_element(1, 1, 1.0), Vector::from([-2.0])).unwrap(),
        )
        .unwrap();
        let g = Bifunction::function_difference(interval(), ConvexFunction::weighted_l1(Vector::from([1.0])).unwrap())
            .unwrap();
        let result = solve(&f, &g, &Vector::from([0.0]), &SolverConfig::default()).unwrap();
        assert_eq!(result.status, Status::Converged);
        assert!((result.y_star[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn max_iter_is_reported() {
        let q = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap();
        let f = Bifunction::function_difference(line(), q).unwrap();
        let cfg = SolverConfig {
            max_iter: 2,
            ..SolverConfig::default()
        };
        let result = solve(&f, &Bifunction::zero(line()), &Vector::from([3.0]), &cfg).unwrap();
        assert_eq!(result.status, Status::MaxIter);
        assert_eq!(result.iterations, 2);
    }

    #[test]
    fn inner_failure_is_reported() {
        let g = Bifunction::generic(line(), "slow", |x, y| 1e-3 * x[0] * (y[0] - x[0]));
        let cfg = SolverConfig {
            inner_max_iter: 2,
            inner_tol: 1e-14,
            ..SolverConfig::default()
        };
        let result = solve(&g, &g, &Vector::from([100.0]), &cfg).unwrap();
        assert_eq!(result.status, Status::InnerFailure);
        assert!(matches!(result.failure, Some(Error::Resolvent { iteration: 0, .. })));
    }

    #[test]
    fn trace_thinning_keeps_last_record() {
        let q = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap();
        let f = Bifunction::function_difference(line(), q).unwrap();
        let cfg = SolverConfig {
            trace_every: 5,
            ..SolverConfig::default()
        };
        let result = solve(&f, &Bifunction::zero(line()), &Vector::from([3.0]), &cfg).unwrap();
        let ns: Vec<usize> = result.trace.records().iter().map(|r| r.n).collect();
        assert!(ns.iter().rev().skip(1).all(|n| n % 5 == 0));
        assert_eq!(*ns.last().unwrap() + 1, result.iterations);
    }

    #[test]
    fn mismatched_sets_are_rejected() {
        let f = Bifunction::zero(line());
        let g = Bifunction::zero(interval());
        assert!(matches!(
            solve(&f, &g, &Vector::from([0.0]), &SolverConfig::default()),
            Err(Error::SetMismatch)
        ));
    }
}
