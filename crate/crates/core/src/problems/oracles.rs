//! Independent solution oracles for the corpus: enumeration of optimality
//! cases and scalar root finding, sharing no code with the solver.

use nalgebra::{DMatrix, DVector};

use crate::hilbert::Vector;

/// Root of a continuous scalar function with a sign change on `[lo, hi]`, by bisection.
pub fn scalar_root(phi: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (mut flo, fhi) = (phi(lo), phi(hi));
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = phi(mid);
        if fm == 0.0 || mid == lo || mid == hi {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Solutions of the box-constrained affine variational inequality
/// `<M x + q, y - x> >= 0` for all `y` in `[lo, hi]`, by enumerating the
/// `3^d` assignments of each coordinate to its lower bound, its upper bound
/// or the interior.
pub fn box_vi_active_set(m: &DMatrix<f64>, q: &[f64], lo: &[f64], hi: &[f64]) -> Vec<Vector> {
    let d = q.len();
    let tol = 1e-12;
    let mut out: Vec<Vector> = Vec::new();
    for code in 0..3usize.pow(d as u32) {
        // 0 = lower, 1 = free, 2 = upper
        let status: Vec<usize> = (0..d).map(|i| (code / 3usize.pow(i as u32)) % 3).collect();
        let mut x = vec![0.0; d];
        let free: Vec<usize> = (0..d).filter(|&i| status[i] == 1).collect();
        for i in 0..d {
            match status[i] {
                0 => x[i] = lo[i],
                2 => x[i] = hi[i],
                _ => {}
            }
        }
        if !free.is_empty() {
            // M_ff x_f = -(q_f + M_fb x_b)
            let k = free.len();
            let mut a = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            for (r, &i) in free.iter().enumerate() {
                rhs[r] = -q[i];
                for j in 0..d {
                    if status[j] == 1 {
                        let c = free.iter().position(|&f| f == j).unwrap();
                        a[(r, c)] = m[(i, j)];
                    } else {
                        rhs[r] -= m[(i, j)] * x[j];
                    }
                }
            }
            let Some(sol) = a.lu().solve(&rhs) else {
                continue;
            };
            for (r, &i) in free.iter().enumerate() {
                x[i] = sol[r];
            }
        }
        let feasible = (0..d).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol);
        let signs_ok = (0..d).all(|i| {
            let g: f64 = q[i] + (0..d).map(|j| m[(i, j)] * x[j]).sum::<f64>();
            match status[i] {
                0 => g >= -tol,
                2 => g <= tol,
                _ => true,
            }
        });
        let x = Vector::from(x);
        if feasible && signs_ok && !out.iter().any(|p| p.distance(&x) < 1e-9) {
            out.push(x);
        }
    }
    out
}

/// Solutions of `0 in x - d + w d|x| + N_[lo, hi](x)` on the line, by
/// checking the five candidate cases: either bound, the kink, and the two
/// smooth branches `x = d - w > 0`, `x = d + w < 0`.
pub fn mixed_equilibrium_kkt(d: f64, w: f64, lo: f64, hi: f64) -> Vec<f64> {
    let tol = 1e-12;
    // subdifferential of w|x| at x as an interval
    let abs_sub = |x: f64| {
        if x > 0.0 {
            (w, w)
        } else if x < 0.0 {
            (-w, -w)
        } else {
            (-w, w)
        }
    };
    let mut out = Vec::new();
    let mut push = |x: f64| {
        if x >= lo - tol && x <= hi + tol && !out.iter().any(|&p: &f64| (p - x).abs() < 1e-12) {
            out.push(x);
        }
    };
    // at lo the normal cone is (-inf, 0], so x - d + s >= 0 for some s
    let (_, s_max) = abs_sub(lo);
    if lo - d + s_max >= -tol {
        push(lo);
    }
    let (s_min, _) = abs_sub(hi);
    if hi - d + s_min <= tol {
        push(hi);
    }
    // interior kink: |d| <= w
    if lo < 0.0 && hi > 0.0 && d.abs() <= w + tol {
        push(0.0);
    }
    let pos = d - w;
    if pos > 0.0 && pos > lo && pos < hi {
        push(pos);
    }
    let neg = d + w;
    if neg < 0.0 && neg > lo && neg < hi {
        push(neg);
    }
    out
}

/// The unique zero of the linear map `x -> M x` when `M` is nonsingular.
pub fn linear_zero(m: &DMatrix<f64>) -> Option<Vector> {
    let d = m.nrows();
    m.clone()
        .lu()
        .solve(&DVector::zeros(d))
        .map(|v| Vector::from_dvector(&v))
}
