use thiserror::Error;

use crate::hilbert::Vector;

/// Errors raised by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid convex set: {0}")]
    InvalidSet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bifunction evaluated to NaN at x = {x:?}, y = {y:?}")]
    NanEvaluation { x: Vec<f64>, y: Vec<f64> },

    #[error("bifunctions are defined on different sets")]
    SetMismatch,

    #[error("inner resolvent solve stopped after {iterations} iterations with residual {residual:e}")]
    InnerSolve {
        iterations: usize,
        residual: f64,
        last: Vector,
    },

    #[error("resolvent failed at iteration {iteration}: {source}")]
    Resolvent {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("fixed-point iteration did not reach tolerance after {iterations} iterations (residual {residual:e})")]
    MaxIterations {
        iterations: usize,
        residual: f64,
        last: Vector,
    },

    #[error("point is outside the operator domain")]
    OutsideDomain,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty grid")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, Error>;
