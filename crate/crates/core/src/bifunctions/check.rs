use super::Bifunction;
use crate::error::Result;
use crate::hilbert::seeded_rng;

/// Tolerance for the vanishing-diagonal, monotonicity and convexity conditions.
pub const STRUCTURE_TOL: f64 = 1e-10;
/// Tolerance for the hemicontinuity proxy.
pub const HEMICONTINUITY_TOL: f64 = 1e-6;

const EPSILON_LADDER: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Worst violations of the four standing conditions over a random sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Assumption1Report {
    pub passed: bool,
    /// `max |H(x, x)|`
    pub vanishing_diagonal: f64,
    /// `max (H(x, y) + H(y, x))+`
    pub monotonicity: f64,
    /// `max (H(x, (y+z)/2) - (H(x, y) + H(x, z))/2)+`
    pub convexity: f64,
    /// `max (limsup_{eps -> 0} H((1-eps) x + eps z, y) - H(x, y))+`, estimated
    /// by extrapolating the last two rungs of an epsilon ladder.
    pub hemicontinuity: f64,
    pub samples: usize,
}

impl Assumption1Report {
    pub fn worst(&self) -> f64 {
        self.vanishing_diagonal
            .max(self.monotonicity)
            .max(self.convexity)
            .max(self.hemicontinuity)
    }
}

/// Sampled diagnostic of the standing assumptions on a bifunction.
///
/// Deterministic in `seed`. A NaN from the oracle is an error naming the pair.
/// Lower semicontinuity in the second argument is not observable from
/// midpoint samples and is not reported.
pub fn check_assumption1(f: &Bifunction, samples: usize, seed: u64) -> Result<Assumption1Report> {
    let samples = samples.max(1);
    let set = f.set();
    let mut rng = seeded_rng(seed);
    let mut report = Assumption1Report {
        passed: true,
        vanishing_diagonal: 0.0,
        monotonicity: 0.0,
        convexity: 0.0,
        hemicontinuity: 0.0,
        samples,
    };
    for _ in 0..samples {
        let x = set.sample(&mut rng);
        let y = set.sample(&mut rng);
        let z = set.sample(&mut rng);

        let hxx = f.try_eval(&x, &x)?;
        report.vanishing_diagonal = report.vanishing_diagonal.max(hxx.abs());

        let hxy = f.try_eval(&x, &y)?;
        let hyx = f.try_eval(&y, &x)?;
        report.monotonicity = report.monotonicity.max(hxy + hyx);

        let mid = &(&y + &z) * 0.5;
        let hxz = f.try_eval(&x, &z)?;
        let hmid = f.try_eval(&x, &mid)?;
        report.convexity = report.convexity.max(hmid - 0.5 * (hxy + hxz));

        let mut ladder = [0.0; EPSILON_LADDER.len()];
        for (slot, &eps) in ladder.iter_mut().zip(&EPSILON_LADDER) {
            let moved = &(&x * (1.0 - eps)) + &(&z * eps);
            *slot = f.try_eval(&moved, &y)?;
        }
        let n = ladder.len();
        // linear extrapolation in eps from the two smallest rungs (ratio 10)
        let limit = (10.0 * ladder[n - 1] - ladder[n - 2]) / 9.0;
        report.hemicontinuity = report.hemicontinuity.max(limit - hxy);
    }
    report.passed = report.vanishing_diagonal <= STRUCTURE_TOL
        && report.monotonicity <= STRUCTURE_TOL
        && report.convexity <= STRUCTURE_TOL
        && report.hemicontinuity <= HEMICONTINUITY_TOL;
    Ok(report)
}
