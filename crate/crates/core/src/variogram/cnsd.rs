use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::VariogramModel;
use crate::geo::{haversine_km, GeoPoint};

/// Largest accepted value of `Σ wᵢwⱼγᵢⱼ / (‖w‖² max|γ|)`.
pub const CNSD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnsdReport {
    pub passed: bool,
    /// Largest scaled quadratic form seen; non-positive for a valid model.
    pub worst_violation: f64,
    pub trials: usize,
}

/// Monte Carlo check that `Σ wᵢwⱼ γ(sᵢ - sⱼ) ≤ 0` for random zero-sum `w`.
pub fn check_cnsd(m: &VariogramModel, sites: &[GeoPoint], trials: usize, seed: u64) -> CnsdReport {
    check_cnsd_with(|h| m.gamma(h), sites, trials, seed)
}

/// As [`check_cnsd`] for an arbitrary lag function with `γ(0)` taken as 0.
pub fn check_cnsd_with<F: Fn(f64) -> f64>(gamma: F, sites: &[GeoPoint], trials: usize, seed: u64) -> CnsdReport {
    let n = sites.len();
    let mut g = vec![0.0; n * n];
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let v = gamma(haversine_km(sites[i], sites[j]));
            g[i * n + j] = v;
            g[j * n + i] = v;
            scale = scale.max(v.abs());
        }
    }
    if n < 2 || scale == 0.0 {
        return CnsdReport {
            passed: true,
            worst_violation: 0.0,
            trials,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut w = vec![0.0; n];
    for _ in 0..trials {
        for v in w.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mean = w.iter().sum::<f64>() / n as f64;
        w.iter_mut().for_each(|v| *v -= mean);
        let norm2: f64 = w.iter().map(|v| v * v).sum();
        let q: f64 = (0..n)
            .map(|i| w[i] * (0..n).map(|j| g[i * n + j] * w[j]).sum::<f64>())
            .sum();
        worst = worst.max(q / (norm2 * scale));
    }
    CnsdReport {
        passed: worst <= CNSD_TOLERANCE,
        worst_violation: worst,
        trials,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Structure, StructureKind};
    use super::*;
    use rand::Rng;

    fn random_sites(n: usize, seed: u64) -> Vec<GeoPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| GeoPoint::new(rng.random_range(32.5..35.5), rng.random_range(-120.0..-114.5)).unwrap())
            .collect()
    }

    #[test]
    fn pure_nugget_passes() {
        let r = check_cnsd(&VariogramModel::pure_nugget(0.3), &random_sites(20, 1), 200, 42);
        assert!(r.passed);
    }

    #[test]
    fn valid_models_pass() {
        let sites = random_sites(85, 2);
        for kind in StructureKind::ALL {
            let m = VariogramModel::new(
                0.1,
                vec![Structure {
                    kind,
                    sill: 1.0,
                    range: 50.0,
                }],
            )
            .unwrap();
            let r = check_cnsd(&m, &sites, 1000, 42);
            assert!(r.passed, "{kind}: {r:?}");
            assert!(r.worst_violation < 0.0);
        }
    }

    #[test]
    fn negative_linear_fails() {
        let r = check_cnsd_with(|h| -h, &random_sites(30, 3), 100, 42);
        assert!(!r.passed && r.worst_violation > 0.0);
    }
}
