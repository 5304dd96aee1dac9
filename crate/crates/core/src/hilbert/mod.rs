//! Euclidean-space primitives: vectors, inner products and closed convex
//! sets given through projection oracles.

mod set;
mod vector;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use set::{ConvexSet, INTERSECTION_MAX_SWEEPS, INTERSECTION_TOL, MEMBERSHIP_TOL};
pub use vector::Vector;

use crate::error::{Error, Result};

/// Checked Euclidean inner product.
pub fn inner(a: &Vector, b: &Vector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.dot(b))
}

/// Componentwise clamp of `x` to `[lo, hi]`.
pub fn project_box(x: &Vector, lo: &[f64], hi: &[f64]) -> Vector {
    assert!(
        x.dim() == lo.len() && x.dim() == hi.len(),
        "dimension mismatch in box projection"
    );
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&v, (&l, &h))| v.max(l).min(h))
        .collect::<Vec<_>>()
        .into()
}

/// Euclidean projection onto the probability simplex `{y >= 0, sum y = 1}`
/// (sort-and-threshold).
pub fn project_simplex(x: &Vector) -> Vector {
    let mut sorted: Vec<f64> = x.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut y: Vec<f64> = x.iter().map(|&v| (v - theta).max(0.0)).collect();
    // absorb rounding so the coordinates sum to one
    let total: f64 = y.iter().sum();
    if total > 0.0 {
        let fix = (1.0 - total) / y.iter().filter(|&&v| v > 0.0).count() as f64;
        for v in y.iter_mut().filter(|v| **v > 0.0) {
            *v += fix;
        }
    }
    y.into()
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random unit directions, deterministic in `seed`.
pub(crate) fn unit_directions(dim: usize, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(count + 2 * dim);
    for i in 0..dim {
        out.push(Vector::basis(dim, i));
        out.push(-Vector::basis(dim, i));
    }
    while out.len() < count + 2 * dim {
        let g: Vector = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect::<Vec<_>>()
            .into();
        let n = g.norm();
        if n > 1e-12 {
            out.push(&g * (1.0 / n));
        }
    }
    out.truncate(count.max(2 * dim));
    out
}

/// Points of `set` near `center`: `center + r d` projected, over a ladder of
/// radii and a fixed set of directions.
pub(crate) fn local_probes(set: &ConvexSet, center: &Vector, directions: &[Vector], radii: &[f64]) -> Vec<Vector> {
    let mut out = Vec::with_capacity(directions.len() * radii.len());
    for &r in radii {
        for d in directions {
            out.push(set.project(&center.axpy(r, d)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_examples() {
        assert_eq!(
            inner(&Vector::from([1.0, 0.0]), &Vector::from([0.0, 1.0])).unwrap(),
            0.0
        );
        assert_eq!(
            inner(&Vector::from([2.0, 3.0]), &Vector::from([2.0, 3.0])).unwrap(),
            13.0
        );
        assert_eq!(
            inner(&Vector::from([1.0, 2.0, 3.0]), &Vector::from([4.0, 5.0, 6.0])).unwrap(),
            32.0
        );
        assert!(matches!(
            inner(&Vector::from([1.0]), &Vector::from([1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn box_examples() {
        assert_eq!(project_box(&Vector::from([3.0]), &[-1.0], &[1.0]), Vector::from([1.0]));
        assert_eq!(project_box(&Vector::from([0.5]), &[-1.0], &[1.0]), Vector::from([0.5]));
        assert_eq!(
            project_box(&Vector::from([-2.0, 0.3]), &[-1.0, -1.0], &[1.0, 1.0]),
            Vector::from([-1.0, 0.3])
        );
    }

    #[test]
    fn simplex_fixed_points() {
        assert_eq!(
            project_simplex(&Vector::from([1.0, 0.0, 0.0])),
            Vector::from([1.0, 0.0, 0.0])
        );
        assert_eq!(project_simplex(&Vector::from([0.5, 0.5])), Vector::from([0.5, 0.5]));
    }

    #[test]
    fn simplex_outside_point_against_grid_oracle() {
        // brute force: minimize |y - x| over y = (t, 1 - t), t on a 1e-3 grid
        let x = Vector::from([2.0, 0.0]);
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=1000 {
            let t = k as f64 * 1e-3;
            let d = x.distance(&Vector::from([t, 1.0 - t]));
            if d < best.0 {
                best = (d, t);
            }
        }
        let oracle = Vector::from([best.1, 1.0 - best.1]);
        assert_eq!(oracle, Vector::from([1.0, 0.0]));
        let p = project_simplex(&x);
        assert!(p.distance(&oracle) <= 1e-3);
        assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn unit_directions_cover_axes() {
        let dirs = unit_directions(2, 8, 1);
        assert_eq!(dirs.len(), 8);
        assert!(dirs.iter().all(|d| (d.norm() - 1.0).abs() < 1e-12));
    }
}
