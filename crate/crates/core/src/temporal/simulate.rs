use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::TemporalParams;

const BURN_IN_DAYS: i64 = 500;

/// Draw a log-speed path of length `n` for days `t0..t0 + n` from the model.
/// The AR state is spun up over a burn-in period before `t0`.
pub fn simulate_log_series<R: Rng + ?Sized>(p: &TemporalParams, t0: i64, n: usize, rng: &mut R) -> Vec<f64> {
    let (mut x1, mut x2) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for t in (t0 - BURN_IN_DAYS)..(t0 + n as i64) {
        let e: f64 = StandardNormal.sample(rng);
        let x = p.alpha[0] * x1 + p.alpha[1] * x2 + p.variance(t as f64).max(0.0).sqrt() * e;
        x2 = x1;
        x1 = x;
        if t >= t0 {
            out.push(p.seasonal(t as f64) + x);
        }
    }
    out
}
