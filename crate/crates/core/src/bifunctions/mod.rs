//! Bifunctions `H: C x C -> R` tagged with the structural family that the
//! resolvent code exploits.

mod check;
mod function;

use std::fmt;
use std::sync::Arc;

pub use check::{check_assumption1, Assumption1Report, HEMICONTINUITY_TOL, STRUCTURE_TOL};
pub use function::{AffineMap, ConvexFunction};

use crate::error::{Error, Result};
use crate::hilbert::{ConvexSet, Vector};
use crate::operators::MonotoneOperator;

/// Evaluation oracle `(x, y) -> H(x, y)`.
pub type EvalFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;
/// Oracle returning a subgradient of `H(x, .)` at `y`.
pub type SubgradientFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;

/// Step of the central differences used when a generic bifunction has no
/// subgradient oracle.
pub const FINITE_DIFFERENCE_STEP: f64 = 1e-6;

#[derive(Clone)]
pub struct GenericOracle {
    name: String,
    eval: EvalFn,
    subgradient: Option<SubgradientFn>,
}

/// Structural family of a bifunction, declared by its constructor.
#[derive(Clone)]
pub enum Family {
    /// `H = 0`.
    Zero,
    /// `H(x, y) = <B x, y - x>` with `B` affine.
    OperatorInduced(AffineMap),
    /// `H(x, y) = f(y) - f(x)`.
    FunctionDifference(ConvexFunction),
    /// Pointwise sum of two bifunctions on the same set.
    Sum(Box<Bifunction>, Box<Bifunction>),
    /// `H(x, y) = max_{u in A x} <y - x, u>` for a monotone operator `A`.
    FromOperator(Arc<MonotoneOperator>),
    /// Arbitrary oracle.
    Generic(GenericOracle),
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Zero => write!(f, "Zero"),
            Family::OperatorInduced(map) => f.debug_tuple("OperatorInduced").field(map).finish(),
            Family::FunctionDifference(g) => f.debug_tuple("FunctionDifference").field(g).finish(),
            Family::Sum(a, b) => f.debug_tuple("Sum").field(a).field(b).finish(),
            Family::FromOperator(op) => f.debug_tuple("FromOperator").field(op).finish(),
            Family::Generic(g) => write!(f, "Generic({})", g.name),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Bifunction {
    set: ConvexSet,
    family: Family,
}

impl Bifunction {
    pub fn zero(set: ConvexSet) -> Self {
        Bifunction {
            set,
            family: Family::Zero,
        }
    }

    /// `<M x + c, y - x>`.
    pub fn operator_induced(set: ConvexSet, map: AffineMap) -> Result<Self> {
        check_dim(&set, map.dim())?;
        Ok(Bifunction {
            set,
            family: Family::OperatorInduced(map),
        })
    }

    /// `f(y) - f(x)`.
    pub fn function_difference(set: ConvexSet, f: ConvexFunction) -> Result<Self> {
        check_dim(&set, f.dim())?;
        Ok(Bifunction {
            set,
            family: Family::FunctionDifference(f),
        })
    }

    /// Arbitrary oracle. Without a subgradient oracle the resolvent solver
    /// falls back to central finite differences.
    pub fn generic(
        set: ConvexSet,
        name: impl Into<String>,
        eval: impl Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Bifunction {
            set,
            family: Family::Generic(GenericOracle {
                name: name.into(),
                eval: Arc::new(eval),
                subgradient: None,
            }),
        }
    }

    /// Attaches a subgradient oracle to a generic bifunction; other families
    /// already carry exact subgradients and are returned unchanged.
    pub fn with_subgradient(
        mut self,
        subgradient: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        if let Family::Generic(oracle) = &mut self.family {
            oracle.subgradient = Some(Arc::new(subgradient));
        }
        self
    }

    pub(crate) fn from_operator(set: ConvexSet, op: Arc<MonotoneOperator>) -> Self {
        Bifunction {
            set,
            family: Family::FromOperator(op),
        }
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Zero => "zero",
            Family::OperatorInduced(_) => "operator-induced",
            Family::FunctionDifference(_) => "function-difference",
            Family::Sum(..) => "sum",
            Family::FromOperator(_) => "from-operator",
            Family::Generic(_) => "generic",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, Family::Zero)
    }

    /// `H(x, y)`. May be NaN for oracles that are undefined at the pair.
    pub fn eval(&self, x: &Vector, y: &Vector) -> f64 {
        match &self.family {
            Family::Zero => 0.0,
            Family::OperatorInduced(map) => map.apply(x).dot(&(y - x)),
            Family::FunctionDifference(f) => f.value(y) - f.value(x),
            Family::Sum(a, b) => a.eval(x, y) + b.eval(x, y),
            Family::FromOperator(op) => match op.evaluate(x) {
                Ok(image) => image.support(&(y - x)),
                Err(_) => f64::NAN,
            },
            Family::Generic(g) => (g.eval)(x, y),
        }
    }

    /// Like [`Bifunction::eval`] but turns NaN into an error naming the pair.
    pub fn try_eval(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let v = self.eval(x, y);
        if v.is_nan() {
            return Err(Error::NanEvaluation {
                x: x.as_slice().to_vec(),
                y: y.as_slice().to_vec(),
            });
        }
        Ok(v)
    }

    /// A subgradient of `H(x, .)` at `y`.
    pub fn subgradient_y(&self, x: &Vector, y: &Vector) -> Vector {
        match &self.family {
            Family::Zero => Vector::zeros(self.dim()),
            Family::OperatorInduced(map) => map.apply(x),
            Family::FunctionDifference(f) => f.subgradient(y),
            Family::Sum(a, b) => &a.subgradient_y(x, y) + &b.subgradient_y(x, y),
            Family::FromOperator(op) => match op.evaluate(x) {
                Ok(image) => image.maximizer(&(y - x)),
                Err(_) => Vector::from_elem(self.dim(), f64::NAN),
            },
            Family::Generic(g) => match &g.subgradient {
                Some(sg) => sg(x, y),
                None => central_difference(|v| (g.eval)(x, v), y),
            },
        }
    }
}

fn central_difference(f: impl Fn(&Vector) -> f64, y: &Vector) -> Vector {
    let h = FINITE_DIFFERENCE_STEP;
    (0..y.dim())
        .map(|i| {
            let mut plus = y.clone();
            let mut minus = y.clone();
            plus[i] += h;
            minus[i] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect::<Vec<_>>()
        .into()
}

fn check_dim(set: &ConvexSet, dim: usize) -> Result<()> {
    if set.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: dim,
        });
    }
    Ok(())
}

/// Pointwise sum `F + G`; both must live on the same set.
pub fn sum(f: &Bifunction, g: &Bifunction) -> Result<Bifunction> {
    if f.set != g.set {
        return Err(Error::SetMismatch);
    }
    Ok(Bifunction {
        set: f.set.clone(),
        family: Family::Sum(Box::new(f.clone()), Box::new(g.clone())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn real_line() -> ConvexSet {
        ConvexSet::whole_space(1).unwrap()
    }

    fn square() -> Bifunction {
        let f = ConvexFunction::quadratic(DMatrix::from_element(1, 1, 2.0), Vector::zeros(1)).unwrap();
        Bifunction::function_difference(real_line(), f).unwrap()
    }

    #[test]
    fn sum_examples() {
        let f = square();
        let g = Bifunction::operator_induced(
            real_line(),
            AffineMap::new(DMatrix::zeros(1, 1), Vector::from([1.0])).unwrap(),
        )
        .unwrap();
        let s = sum(&f, &g).unwrap();
        assert_eq!(s.family_name(), "sum");
        assert_eq!(s.eval(&Vector::from([0.0]), &Vector::from([1.0])), 2.0);

        let z = sum(&f, &Bifunction::zero(real_line())).unwrap();
        for (x, y) in [(0.3, -1.2), (2.0, 0.5)] {
            let (x, y) = (Vector::from([x]), Vector::from([y]));
            assert_eq!(z.eval(&x, &y), f.eval(&x, &y));
            assert_eq!(s.eval(&x, &x), 0.0);
        }
    }

    #[test]
    fn sum_requires_same_set() {
        let f = Bifunction::zero(real_line());
        let g = Bifunction::zero(ConvexSet::cube(1, -1.0, 1.0).unwrap());
        assert!(matches!(sum(&f, &g), Err(Error::SetMismatch)));
    }

    #[test]
    fn generic_finite_difference_subgradient() {
        let g = Bifunction::generic(real_line(), "y^2 - x^2", |x, y| y[0] * y[0] - x[0] * x[0]);
        let s = g.subgradient_y(&Vector::from([5.0]), &Vector::from([0.75]));
        assert!((s[0] - 1.5).abs() < 1e-8);
    }

    #[test]
    fn nan_evaluation_names_the_pair() {
        let g = Bifunction::generic(real_line(), "bad", |_, _| f64::NAN);
        let err = g.try_eval(&Vector::from([1.0]), &Vector::from([2.0])).unwrap_err();
        assert!(err.to_string().contains("[1.0]") && err.to_string().contains("[2.0]"));
    }
}
