use crate::error::{Error, Result};
use crate::hilbert::Vector;

/// Shape of a relaxation sequence.
#[derive(Clone, Debug, PartialEq)]
pub enum RelaxationRule {
    /// `lambda_n = value`.
    Constant(f64),
    /// `lambda_n = initial / (n + 1)^power` with `power` in `(0, 1]`.
    Decaying { initial: f64, power: f64 },
    /// `lambda_n = upper - upper / (2 (n + 1)^power)` with `power` in `(0, 1]`.
    TowardUpper { power: f64 },
}

/// A relaxation sequence with values in `(0, upper)`.
///
/// Every rule is checked at construction, and every admissible rule keeps
/// `sum lambda_n (upper - lambda_n)` divergent, which is what the
/// convergence theory needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Relaxation {
    rule: RelaxationRule,
    upper: f64,
}

impl Relaxation {
    /// Douglas–Rachford relaxation, values in `(0, 2)`.
    pub fn dr(rule: RelaxationRule) -> Result<Self> {
        Self::with_upper(rule, 2.0)
    }

    /// Krasnosel'skii–Mann relaxation, values in `(0, 1)`.
    pub fn km(rule: RelaxationRule) -> Result<Self> {
        Self::with_upper(rule, 1.0)
    }

    /// Constant Douglas–Rachford relaxation.
    pub fn constant(lambda: f64) -> Result<Self> {
        Self::dr(RelaxationRule::Constant(lambda))
    }

    fn with_upper(rule: RelaxationRule, upper: f64) -> Result<Self> {
        let in_range = |v: f64| v.is_finite() && v > 0.0 && v < upper;
        let power_ok = |p: f64| p.is_finite() && p > 0.0 && p <= 1.0;
        let ok = match rule {
            RelaxationRule::Constant(v) => in_range(v),
            RelaxationRule::Decaying { initial, power } => in_range(initial) && power_ok(power),
            RelaxationRule::TowardUpper { power } => power_ok(power),
        };
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "relaxation {rule:?} must stay in (0,{upper}) with decay power in (0,1]"
            )));
        }
        Ok(Relaxation { rule, upper })
    }

    pub fn rule(&self) -> &RelaxationRule {
        &self.rule
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn at(&self, n: usize) -> f64 {
        let k = (n + 1) as f64;
        match self.rule {
            RelaxationRule::Constant(v) => v,
            RelaxationRule::Decaying { initial, power } => initial / k.powf(power),
            RelaxationRule::TowardUpper { power } => self.upper - self.upper / (2.0 * k.powf(power)),
        }
    }

    /// The same sequence divided by two, as a relaxation for the
    /// Krasnosel'skii–Mann form of the iteration.
    pub fn halved(&self) -> Relaxation {
        let rule = match self.rule {
            RelaxationRule::Constant(v) => RelaxationRule::Constant(v / 2.0),
            RelaxationRule::Decaying { initial, power } => RelaxationRule::Decaying {
                initial: initial / 2.0,
                power,
            },
            RelaxationRule::TowardUpper { power } => RelaxationRule::TowardUpper { power },
        };
        Relaxation {
            rule,
            upper: self.upper / 2.0,
        }
    }
}

impl Default for Relaxation {
    fn default() -> Self {
        Relaxation {
            rule: RelaxationRule::Constant(1.0),
            upper: 2.0,
        }
    }
}

/// Summable perturbation sequences `n -> e_n` injected into the iteration.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum ErrorSchedule {
    #[default]
    Zero,
    /// `scale * ratio^n * direction`, `ratio` in `[0, 1)`.
    Geometric {
        scale: f64,
        ratio: f64,
        direction: Option<Vector>,
    },
    /// `scale / (n + 1)^2 * direction`.
    InverseSquare { scale: f64, direction: Option<Vector> },
}

impl ErrorSchedule {
    /// `ratio^n e_1`.
    pub fn geometric(ratio: f64) -> Result<Self> {
        let schedule = ErrorSchedule::Geometric {
            scale: 1.0,
            ratio,
            direction: None,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    /// `e_1 / (n + 1)^2`.
    pub fn inverse_square(scale: f64) -> Result<Self> {
        let schedule = ErrorSchedule::InverseSquare { scale, direction: None };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        let (scale, direction) = match self {
            ErrorSchedule::Zero => return Ok(()),
            ErrorSchedule::Geometric {
                scale,
                ratio,
                direction,
            } => {
                if !(ratio.is_finite() && (0.0..1.0).contains(ratio)) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric error ratio must be in [0,1), got {ratio}"
                    )));
                }
                (*scale, direction)
            }
            ErrorSchedule::InverseSquare { scale, direction } => (*scale, direction),
        };
        if !scale.is_finite() {
            return Err(Error::NonFinite("error schedule scale".into()));
        }
        if direction.as_ref().is_some_and(|d| !d.is_finite()) {
            return Err(Error::NonFinite("error schedule direction".into()));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ErrorSchedule::Zero)
    }

    /// The perturbation at iteration `n` in dimension `dim`.
    pub fn at(&self, n: usize, dim: usize) -> Vector {
        let (magnitude, direction) = match self {
            ErrorSchedule::Zero => return Vector::zeros(dim),
            ErrorSchedule::Geometric {
                scale,
                ratio,
                direction,
            } => (scale * ratio.powi(n.min(i32::MAX as usize) as i32), direction),
            ErrorSchedule::InverseSquare { scale, direction } => {
                let k = (n + 1) as f64;
                (scale / (k * k), direction)
            }
        };
        match direction {
            Some(d) => d * magnitude,
            None => &Vector::basis(dim, 0) * magnitude,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn out_of_range_relaxation_is_rejected() {
        assert!(Relaxation::constant(2.5).is_err());
        assert!(Relaxation::constant(2.0).is_err());
        assert!(Relaxation::constant(0.0).is_err());
        assert!(Relaxation::constant(1.8).is_ok());
        assert!(Relaxation::km(RelaxationRule::Constant(1.0)).is_err());
        assert!(Relaxation::dr(RelaxationRule::Decaying {
            initial: 1.0,
            power: 1.5
        })
        .is_err());
    }

    #[test]
    fn rules_stay_in_range() {
        let rules = [
            RelaxationRule::Constant(1.9),
            RelaxationRule::Decaying {
                initial: 1.5,
                power: 1.0,
            },
            RelaxationRule::TowardUpper { power: 0.5 },
        ];
        for rule in rules {
            let r = Relaxation::dr(rule).unwrap();
            let h = r.halved();
            for n in [0, 1, 10, 1000, 1_000_000] {
                assert!(r.at(n) > 0.0 && r.at(n) < 2.0);
                assert!((h.at(n) - r.at(n) / 2.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn error_presets() {
        let g = ErrorSchedule::geometric(0.5).unwrap();
        assert_eq!(g.at(0, 2), Vector::from([1.0, 0.0]));
        assert_eq!(g.at(3, 2), Vector::from([0.125, 0.0]));
        let s = ErrorSchedule::inverse_square(2.0).unwrap();
        assert_eq!(s.at(1, 1), Vector::from([0.5]));
        assert!(ErrorSchedule::geometric(1.0).is_err());
        assert_eq!(ErrorSchedule::Zero.at(5, 3), Vector::zeros(3));
    }
}
