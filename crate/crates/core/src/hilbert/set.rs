use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{project_box, project_simplex, Vector};
use crate::error::{Error, Result};

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Stopping tolerance and sweep cap for projections onto intersections.
pub const INTERSECTION_TOL: f64 = 1e-10;
pub const INTERSECTION_MAX_SWEEPS: usize = 10_000;

/// A nonempty closed convex subset of R^d with an exact (or, for
/// intersections, iterative) projection.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexSet {
    dim: usize,
    kind: SetKind,
}

#[derive(Clone, Debug, PartialEq)]
enum SetKind {
    WholeSpace,
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vector,
        radius: f64,
    },
    /// `{x : <normal, x> <= offset}`
    Halfspace {
        normal: Vector,
        offset: f64,
    },
    Simplex,
    /// `{x : A x = b}`; `pinv` caches `A^T (A A^T)^{-1}`.
    Affine {
        matrix: DMatrix<f64>,
        rhs: Vector,
        pinv: DMatrix<f64>,
    },
    Intersection {
        parts: Vec<ConvexSet>,
    },
}

impl ConvexSet {
    pub fn whole_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSet("dimension must be >= 1".into()));
        }
        Ok(ConvexSet {
            dim,
            kind: SetKind::WholeSpace,
        })
    }

    /// Box `[lo, hi]`; infinite bounds are allowed, NaN and `lo > hi` are not.
    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidSet(format!(
                "box bounds must be nonempty and of equal length (got {} and {})",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if l.is_nan() || h.is_nan() {
                return Err(Error::InvalidSet(format!("NaN bound in coordinate {i}")));
            }
            if l > h {
                return Err(Error::InvalidSet(format!(
                    "lower bound {l} exceeds upper bound {h} in coordinate {i}"
                )));
            }
            if *l == f64::INFINITY || *h == f64::NEG_INFINITY {
                return Err(Error::InvalidSet(format!("empty box in coordinate {i}")));
            }
        }
        Ok(ConvexSet {
            dim: lo.len(),
            kind: SetKind::Box { lo, hi },
        })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; dim], vec![hi; dim])
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !center.is_finite() || !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::InvalidSet(format!(
                "ball needs a finite center and radius >= 0 (radius {radius})"
            )));
        }
        Ok(ConvexSet {
            dim: center.dim(),
            kind: SetKind::Ball { center, radius },
        })
    }

    /// Half-space `{x : <normal, x> <= offset}`.
    pub fn halfspace(normal: Vector, offset: f64) -> Result<Self> {
        if !normal.is_finite() || !offset.is_finite() || normal.norm() == 0.0 {
            return Err(Error::InvalidSet(
                "half-space needs a nonzero finite normal and a finite offset".into(),
            ));
        }
        Ok(ConvexSet {
            dim: normal.dim(),
            kind: SetKind::Halfspace { normal, offset },
        })
    }

    /// Standard probability simplex `{x >= 0, sum x = 1}`.
    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSet("dimension must be >= 1".into()));
        }
        Ok(ConvexSet {
            dim,
            kind: SetKind::Simplex,
        })
    }

    /// Affine subspace `{x : A x = b}`; `A` must have full row rank.
    pub fn affine(matrix: DMatrix<f64>, rhs: Vector) -> Result<Self> {
        if matrix.nrows() != rhs.dim() || matrix.ncols() == 0 {
            return Err(Error::InvalidSet(format!(
                "affine constraint has {} rows but rhs has length {}",
                matrix.nrows(),
                rhs.dim()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) || !rhs.is_finite() {
            return Err(Error::InvalidSet("non-finite affine data".into()));
        }
        let gram = &matrix * matrix.transpose();
        let eigen = gram.clone().symmetric_eigenvalues();
        if eigen.min() <= 1e-12 * eigen.max().max(1.0) {
            return Err(Error::InvalidSet("affine constraint matrix is rank deficient".into()));
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::InvalidSet("affine constraint matrix is rank deficient".into()))?;
        let pinv = matrix.transpose() * chol.inverse();
        Ok(ConvexSet {
            dim: matrix.ncols(),
            kind: SetKind::Affine { matrix, rhs, pinv },
        })
    }

    /// Intersection of several sets, projected with Dykstra's alternating
    /// projections. The result is flagged approximate.
    pub fn intersection(parts: Vec<ConvexSet>) -> Result<Self> {
        let dim = parts
            .first()
            .ok_or_else(|| Error::InvalidSet("intersection of no sets".into()))?
            .dim;
        if parts.iter().any(|p| p.dim != dim) {
            return Err(Error::InvalidSet("intersection parts differ in dimension".into()));
        }
        Ok(ConvexSet {
            dim,
            kind: SetKind::Intersection { parts },
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SetKind::WholeSpace => "whole-space",
            SetKind::Box { .. } => "box",
            SetKind::Ball { .. } => "ball",
            SetKind::Halfspace { .. } => "halfspace",
            SetKind::Simplex => "simplex",
            SetKind::Affine { .. } => "affine-subspace",
            SetKind::Intersection { .. } => "intersection",
        }
    }

    /// True when the projection is computed iteratively rather than in closed form.
    pub fn is_approximate(&self) -> bool {
        matches!(self.kind, SetKind::Intersection { .. })
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self.kind, SetKind::WholeSpace)
    }

    /// Bounds when the set is a box; the whole space counts as an unbounded box.
    pub fn box_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match &self.kind {
            SetKind::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            SetKind::WholeSpace => Some((vec![f64::NEG_INFINITY; self.dim], vec![f64::INFINITY; self.dim])),
            _ => None,
        }
    }

    pub fn ball_params(&self) -> Option<(&Vector, f64)> {
        match &self.kind {
            SetKind::Ball { center, radius } => Some((center, *radius)),
            _ => None,
        }
    }

    pub fn halfspace_params(&self) -> Option<(&Vector, f64)> {
        match &self.kind {
            SetKind::Halfspace { normal, offset } => Some((normal, *offset)),
            _ => None,
        }
    }

    pub fn affine_params(&self) -> Option<(&DMatrix<f64>, &Vector)> {
        match &self.kind {
            SetKind::Affine { matrix, rhs, .. } => Some((matrix, rhs)),
            _ => None,
        }
    }

    pub fn parts(&self) -> Option<&[ConvexSet]> {
        match &self.kind {
            SetKind::Intersection { parts } => Some(parts),
            _ => None,
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector) -> Vector {
        assert_eq!(x.dim(), self.dim, "dimension mismatch in projection");
        match &self.kind {
            SetKind::WholeSpace => x.clone(),
            SetKind::Box { lo, hi } => project_box(x, lo, hi),
            SetKind::Ball { center, radius } => {
                let offset = x - center;
                let dist = offset.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center.axpy(radius / dist, &offset)
                }
            }
            SetKind::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x.axpy(-excess / normal.norm_squared(), normal)
                }
            }
            SetKind::Simplex => project_simplex(x),
            SetKind::Affine { matrix, rhs, pinv } => {
                let xv = x.to_dvector();
                let r = matrix * &xv - rhs.to_dvector();
                Vector::from_dvector(&(xv - pinv * r))
            }
            SetKind::Intersection { parts } => dykstra(parts, x),
        }
    }

    /// Membership with tolerance `tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if x.dim() != self.dim || !x.is_finite() {
            return false;
        }
        match &self.kind {
            SetKind::WholeSpace => true,
            SetKind::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            SetKind::Ball { center, radius } => x.distance(center) <= radius + tol,
            SetKind::Halfspace { normal, offset } => normal.dot(x) <= offset + tol * normal.norm(),
            SetKind::Simplex => x.iter().all(|&v| v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol,
            SetKind::Affine { .. } => x.distance(&self.project(x)) <= tol,
            SetKind::Intersection { parts } => parts.iter().all(|p| p.contains(x, tol)),
        }
    }

    /// Topological interior test (the normal cone at `x` is `{0}` exactly here).
    pub fn is_interior(&self, x: &Vector) -> bool {
        if x.dim() != self.dim {
            return false;
        }
        match &self.kind {
            SetKind::WholeSpace => true,
            SetKind::Box { lo, hi } => x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v > *l && *v < *h),
            SetKind::Ball { center, radius } => x.distance(center) < *radius,
            SetKind::Halfspace { normal, offset } => normal.dot(x) < *offset,
            SetKind::Simplex | SetKind::Affine { .. } => false,
            SetKind::Intersection { parts } => parts.iter().all(|p| p.is_interior(x)),
        }
    }

    /// A representative point of the set used to center random sampling.
    fn anchor(&self) -> Vector {
        match &self.kind {
            SetKind::WholeSpace => Vector::zeros(self.dim),
            SetKind::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| match (l.is_finite(), h.is_finite()) {
                    (true, true) => 0.5 * (l + h),
                    (true, false) => l + 1.0,
                    (false, true) => h - 1.0,
                    (false, false) => 0.0,
                })
                .collect::<Vec<_>>()
                .into(),
            SetKind::Ball { center, .. } => center.clone(),
            SetKind::Simplex => Vector::from_elem(self.dim, 1.0 / self.dim as f64),
            SetKind::Halfspace { .. } | SetKind::Affine { .. } => self.project(&Vector::zeros(self.dim)),
            SetKind::Intersection { parts } => self.project(&parts[0].anchor()),
        }
    }

    /// Per-coordinate spread of the sampling distribution.
    fn spread(&self) -> Vec<f64> {
        match &self.kind {
            SetKind::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(&l, &h)| if (h - l).is_finite() { 0.75 * (h - l) } else { 2.0 })
                .collect(),
            SetKind::Ball { radius, .. } => vec![*radius; self.dim],
            SetKind::Simplex => vec![0.5; self.dim],
            SetKind::Intersection { parts } => parts[0].spread(),
            _ => vec![2.0; self.dim],
        }
    }

    /// Draws a point of the set by projecting a Gaussian centered at an
    /// anchor point of the set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let anchor = self.anchor();
        let spread = self.spread();
        let raw: Vector = (0..self.dim)
            .map(|i| {
                let g: f64 = rng.sample(StandardNormal);
                anchor[i] + spread[i] * g
            })
            .collect::<Vec<_>>()
            .into();
        self.project(&raw)
    }

    /// `count` deterministic samples for the given seed.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vector> {
        let mut rng = super::seeded_rng(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

fn dykstra(parts: &[ConvexSet], x: &Vector) -> Vector {
    let mut current = x.clone();
    let mut increments = vec![Vector::zeros(x.dim()); parts.len()];
    for _ in 0..INTERSECTION_MAX_SWEEPS {
        let start = current.clone();
        for (part, inc) in parts.iter().zip(increments.iter_mut()) {
            let shifted = &current + inc;
            let projected = part.project(&shifted);
            *inc = &shifted - &projected;
            current = projected;
        }
        if current.distance(&start) <= INTERSECTION_TOL && parts.iter().all(|p| p.contains(&current, INTERSECTION_TOL))
        {
            break;
        }
    }
    current
}
