use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPoint};

pub const DEFAULT_BIN_WIDTH_KM: f64 = 25.0;

/// Binned classical (Matheron) semivariogram estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalVariogram {
    /// Mean pair distance within each bin, km.
    pub bin_centers: Vec<f64>,
    pub gamma_hat: Vec<f64>,
    pub pair_counts: Vec<usize>,
}

impl EmpiricalVariogram {
    pub fn len(&self) -> usize {
        self.bin_centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_centers.is_empty()
    }
}

pub fn max_pairwise_distance_km(sites: &[GeoPoint]) -> f64 {
    let mut max = 0.0f64;
    for (i, a) in sites.iter().enumerate() {
        for b in &sites[i + 1..] {
            max = max.max(haversine_km(*a, *b));
        }
    }
    max
}

/// Half the largest pairwise distance.
pub fn default_max_lag_km(sites: &[GeoPoint]) -> f64 {
    0.5 * max_pairwise_distance_km(sites)
}

/// `γ̂(bin) = Σ (y_i - y_j)² / (2 N(bin))` over pairs `i < j` whose haversine
/// distance falls into `[k w, (k+1) w)` and does not exceed `max_lag_km`.
/// Empty bins are omitted.
pub fn empirical_semivariogram(
    sites: &[GeoPoint],
    y: &[f64],
    bin_width_km: f64,
    max_lag_km: f64,
) -> Result<EmpiricalVariogram> {
    if sites.len() != y.len() {
        return Err(Error::LengthMismatch(format!("{} sites, {} values", sites.len(), y.len())));
    }
    if sites.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: sites.len(),
        });
    }
    if !(bin_width_km > 0.0) {
        return Err(Error::Negative {
            what: "bin width",
            value: bin_width_km,
        });
    }
    let n_bins = (max_lag_km / bin_width_km).floor() as usize + 1;
    // (distance sum, squared-difference sum, count)
    let mut acc = vec![(0.0, 0.0, 0usize); n_bins];
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            let d = haversine_km(sites[i], sites[j]);
            if d > max_lag_km {
                continue;
            }
            let bin = &mut acc[(d / bin_width_km) as usize];
            bin.0 += d;
            bin.1 += (y[i] - y[j]).powi(2);
            bin.2 += 1;
        }
    }
    let mut ev = EmpiricalVariogram {
        bin_centers: Vec::new(),
        gamma_hat: Vec::new(),
        pair_counts: Vec::new(),
    };
    for (sum_d, sum_sq, n) in acc.into_iter().filter(|b| b.2 > 0) {
        ev.bin_centers.push(sum_d / n as f64);
        ev.gamma_hat.push(sum_sq / (2.0 * n as f64));
        ev.pair_counts.push(n);
    }
    if ev.is_empty() {
        return Err(Error::NoPairs(max_lag_km));
    }
    Ok(ev)
}
