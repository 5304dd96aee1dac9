use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::{ConvexSet, Vector};

/// Convex functions with exact values, subgradients and (where possible)
/// closed-form constrained proximity operators.
#[derive(Clone, Debug, PartialEq)]
pub enum ConvexFunction {
    /// `1/2 y^T Q y + q^T y`, `Q` symmetric positive semidefinite.
    Quadratic { matrix: DMatrix<f64>, linear: Vector },
    /// `sum_i w_i |y_i|`, `w >= 0`.
    WeightedL1 { weights: Vector },
    /// `a^T y + b`.
    Affine { linear: Vector, constant: f64 },
}

impl ConvexFunction {
    pub fn quadratic(matrix: DMatrix<f64>, linear: Vector) -> Result<Self> {
        let d = linear.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidParameter(format!(
                "quadratic matrix is {}x{} but linear term has length {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) || !linear.is_finite() {
            return Err(Error::NonFinite("quadratic coefficients".into()));
        }
        let scale = matrix.amax().max(1.0);
        if (&matrix - matrix.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidParameter("quadratic matrix is not symmetric".into()));
        }
        let min_eig = matrix.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 {
            return Err(Error::InvalidParameter(format!(
                "quadratic matrix is not positive semidefinite (eigenvalue {min_eig:e})"
            )));
        }
        Ok(ConvexFunction::Quadratic { matrix, linear })
    }

    pub fn weighted_l1(weights: Vector) -> Result<Self> {
        if !weights.is_finite() || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParameter(
                "L1 weights must be finite and nonnegative".into(),
            ));
        }
        Ok(ConvexFunction::WeightedL1 { weights })
    }

    pub fn affine(linear: Vector, constant: f64) -> Result<Self> {
        if !linear.is_finite() || !constant.is_finite() {
            return Err(Error::NonFinite("affine coefficients".into()));
        }
        Ok(ConvexFunction::Affine { linear, constant })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::Quadratic { linear, .. } => linear.dim(),
            ConvexFunction::WeightedL1 { weights } => weights.dim(),
            ConvexFunction::Affine { linear, .. } => linear.dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ConvexFunction::Quadratic { .. } => "quadratic",
            ConvexFunction::WeightedL1 { .. } => "weighted-l1",
            ConvexFunction::Affine { .. } => "affine",
        }
    }

    pub fn value(&self, y: &Vector) -> f64 {
        match self {
            ConvexFunction::Quadratic { matrix, linear } => {
                let yv = y.to_dvector();
                0.5 * yv.dot(&(matrix * &yv)) + linear.dot(y)
            }
            ConvexFunction::WeightedL1 { weights } => weights.iter().zip(y.iter()).map(|(w, v)| w * v.abs()).sum(),
            ConvexFunction::Affine { linear, constant } => linear.dot(y) + constant,
        }
    }

    /// An exact subgradient; for the L1 term the sign with `0` at `0`.
    pub fn subgradient(&self, y: &Vector) -> Vector {
        match self {
            ConvexFunction::Quadratic { matrix, linear } => &Vector::from_dvector(&(matrix * y.to_dvector())) + linear,
            ConvexFunction::WeightedL1 { weights } => weights.zip_map(y, |w, v| {
                if v > 0.0 {
                    w
                } else if v < 0.0 {
                    -w
                } else {
                    0.0
                }
            }),
            ConvexFunction::Affine { linear, .. } => linear.clone(),
        }
    }

    fn is_separable(&self) -> bool {
        match self {
            ConvexFunction::Quadratic { matrix, .. } => is_diagonal(matrix),
            _ => true,
        }
    }

    /// Whether [`ConvexFunction::constrained_prox`] has a closed form on `set`.
    pub fn has_closed_form_prox(&self, set: &ConvexSet) -> bool {
        match self {
            ConvexFunction::Affine { .. } => true,
            _ if set.is_whole_space() => true,
            _ => set.box_bounds().is_some() && self.is_separable(),
        }
    }

    /// Minimizer of `gamma f(y) + |y - x|^2 / 2` over `set`, when a closed
    /// form exists (see [`ConvexFunction::has_closed_form_prox`]).
    pub fn constrained_prox(&self, set: &ConvexSet, gamma: f64, x: &Vector) -> Option<Vector> {
        if !self.has_closed_form_prox(set) {
            return None;
        }
        match self {
            ConvexFunction::Affine { linear, .. } => Some(set.project(&x.axpy(-gamma, linear))),
            ConvexFunction::WeightedL1 { weights } => {
                let (lo, hi) = set.box_bounds()?;
                Some(
                    (0..x.dim())
                        .map(|i| soft_threshold(x[i], gamma * weights[i]).max(lo[i]).min(hi[i]))
                        .collect::<Vec<_>>()
                        .into(),
                )
            }
            ConvexFunction::Quadratic { matrix, linear } => {
                if self.is_separable() {
                    let (lo, hi) = set.box_bounds()?;
                    Some(
                        (0..x.dim())
                            .map(|i| {
                                let z = (x[i] - gamma * linear[i]) / (1.0 + gamma * matrix[(i, i)]);
                                z.max(lo[i]).min(hi[i])
                            })
                            .collect::<Vec<_>>()
                            .into(),
                    )
                } else {
                    let d = x.dim();
                    let system = DMatrix::<f64>::identity(d, d) + matrix * gamma;
                    let rhs: DVector<f64> = x.axpy(-gamma, linear).to_dvector();
                    system.lu().solve(&rhs).map(|z| Vector::from_dvector(&z))
                }
            }
        }
    }
}

pub(crate) fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub(crate) fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.nrows() == m.ncols() && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// `x -> M x + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    offset: Vector,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, offset: Vector) -> Result<Self> {
        let d = offset.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidParameter(format!(
                "affine map matrix is {}x{} but offset has length {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::NonFinite("affine map coefficients".into()));
        }
        Ok(AffineMap { matrix, offset })
    }

    /// Linear map `x -> M x` given in row-major order.
    pub fn linear(dim: usize, row_major: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(dim, dim, row_major), Vector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.offset.dim()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn is_diagonal(&self) -> bool {
        is_diagonal(&self.matrix)
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &Vector::from_dvector(&(&self.matrix * x.to_dvector())) + &self.offset
    }

    /// Solves `(I + gamma M) z = x - gamma c`.
    pub fn resolvent(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        let d = self.dim();
        let system = DMatrix::<f64>::identity(d, d) + &self.matrix * gamma;
        let rhs = x.axpy(-gamma, &self.offset).to_dvector();
        system
            .lu()
            .solve(&rhs)
            .map(|z| Vector::from_dvector(&z))
            .ok_or_else(|| Error::InvalidParameter("I + gamma M is singular".into()))
    }
}
