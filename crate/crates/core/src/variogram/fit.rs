use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::optimize::nelder_mead;
use super::{EmpiricalVariogram, ModelFamily, Structure, VariogramModel};
use crate::error::{Error, Result};

/// Fewest nonempty bins accepted by [`fit_model`].
pub const MIN_BINS: usize = 4;

const TIE_RELATIVE: f64 = 1e-9;
const RANDOM_STARTS: usize = 12;
const EVALS_PER_RUN: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub model: VariogramModel,
    pub family: ModelFamily,
    pub objective: f64,
}

/// Cressie-weighted least squares: `Σ N (γ̂ - γ)² / γ²`.
pub fn wls_objective(ev: &EmpiricalVariogram, m: &VariogramModel) -> f64 {
    ev.bin_centers
        .iter()
        .zip(&ev.gamma_hat)
        .zip(&ev.pair_counts)
        .map(|((&h, &g), &n)| {
            let gm = m.gamma(h);
            if gm > 0.0 {
                n as f64 * ((g - gm) / gm).powi(2)
            } else if g == 0.0 && gm == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Search box for one family, with ranges on a log scale.
struct Bounds {
    nugget_max: f64,
    sill_min: f64,
    sill_max: f64,
    ln_range_min: f64,
    ln_range_max: f64,
}

impl Bounds {
    fn new(ev: &EmpiricalVariogram) -> Self {
        let g_max = ev.gamma_hat.iter().copied().fold(0.0, f64::max);
        let h_min = ev.bin_centers.iter().copied().fold(f64::INFINITY, f64::min).max(1e-6);
        let h_max = ev.bin_centers.iter().copied().fold(0.0, f64::max).max(h_min);
        Self {
            nugget_max: 1.5 * g_max,
            sill_min: 1e-12 * g_max,
            sill_max: 3.0 * g_max,
            ln_range_min: (h_min / 20.0).ln(),
            ln_range_max: (10.0 * h_max).ln(),
        }
    }

    fn decode(&self, family: &ModelFamily, u: &[f64]) -> VariogramModel {
        VariogramModel {
            nugget: u[0] * self.nugget_max,
            structures: family
                .kinds
                .iter()
                .enumerate()
                .map(|(k, &kind)| Structure {
                    kind,
                    sill: self.sill_min + u[1 + 2 * k] * (self.sill_max - self.sill_min),
                    range: (self.ln_range_min + u[2 + 2 * k] * (self.ln_range_max - self.ln_range_min)).exp(),
                })
                .collect(),
        }
    }

    fn encode(&self, m: &VariogramModel) -> Vec<f64> {
        let mut u = vec![m.nugget / self.nugget_max];
        for s in &m.structures {
            u.push((s.sill - self.sill_min) / (self.sill_max - self.sill_min));
            u.push((s.range.ln() - self.ln_range_min) / (self.ln_range_max - self.ln_range_min));
        }
        u.iter().map(|v| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.5 }).collect()
    }
}

/// Closed-form minimiser for a constant model: `η = Σ N γ̂² / Σ N γ̂`.
fn fit_pure_nugget(ev: &EmpiricalVariogram) -> FittedModel {
    let (num, den) = ev
        .gamma_hat
        .iter()
        .zip(&ev.pair_counts)
        .fold((0.0, 0.0), |(a, b), (&g, &n)| (a + n as f64 * g * g, b + n as f64 * g));
    let nugget = if den > 0.0 { num / den } else { 0.0 };
    let model = VariogramModel::pure_nugget(nugget);
    FittedModel {
        objective: wls_objective(ev, &model),
        model,
        family: ModelFamily::nugget(),
    }
}

fn fit_family(ev: &EmpiricalVariogram, family: &ModelFamily, rng: &mut ChaCha8Rng) -> Option<FittedModel> {
    if family.kinds.is_empty() {
        let fit = fit_pure_nugget(ev);
        return fit.objective.is_finite().then_some(fit);
    }
    let bounds = Bounds::new(ev);
    let objective = |u: &[f64]| wls_objective(ev, &bounds.decode(family, u));
    let dim = family.n_params();

    // A moment-based start: nugget from the first bin, sills splitting the
    // remaining plateau, ranges spread across the lag span.
    let g_first = ev.gamma_hat[0];
    let g_max = ev.gamma_hat.iter().copied().fold(0.0, f64::max);
    let h_max = ev.bin_centers.iter().copied().fold(0.0, f64::max);
    let n_struct = family.kinds.len();
    let heuristic = VariogramModel {
        nugget: 0.5 * g_first,
        structures: family
            .kinds
            .iter()
            .enumerate()
            .map(|(k, &kind)| Structure {
                kind,
                sill: ((g_max - 0.5 * g_first) / n_struct as f64).max(bounds.sill_min),
                range: h_max * (k + 1) as f64 / (n_struct + 1) as f64,
            })
            .collect(),
    };
    let mut starts = vec![bounds.encode(&heuristic)];
    starts.extend((0..RANDOM_STARTS).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect::<Vec<f64>>()));

    let mut runs: Vec<_> = starts.iter().map(|s| nelder_mead(&objective, s, 0.15, EVALS_PER_RUN)).collect();
    runs.sort_by(|a, b| a.f.total_cmp(&b.f));
    runs.truncate(3);

    // Restart from the leading candidates with shrinking simplices.
    let mut best = runs[0].clone();
    for run in runs {
        let mut cur = run;
        for step in [0.05, 0.01, 1e-3, 1e-4, 1e-3, 1e-5] {
            let next = nelder_mead(&objective, &cur.x, step, EVALS_PER_RUN);
            if next.f <= cur.f {
                cur = next;
            }
        }
        if cur.f < best.f {
            best = cur;
        }
    }
    if !best.f.is_finite() {
        return None;
    }
    let model = bounds.decode(family, &best.x);
    Some(FittedModel {
        objective: wls_objective(ev, &model),
        model,
        family: family.clone(),
    })
}

/// Best fit within each candidate family; families whose search never reaches
/// a finite objective are dropped.
pub fn fit_all(ev: &EmpiricalVariogram, candidates: &[ModelFamily], seed: u64) -> Result<Vec<FittedModel>> {
    if ev.len() < MIN_BINS {
        return Err(Error::TooFewBins(ev.len()));
    }
    if let Some(k) = candidates.iter().find(|f| f.kinds.len() > 2) {
        return Err(Error::InvalidModel(format!("family `{k}` has more than two structures")));
    }
    Ok(candidates
        .iter()
        .enumerate()
        .filter_map(|(i, family)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            fit_family(ev, family, &mut rng)
        })
        .collect())
}

/// Lowest-objective model over all candidate families. Objectives within
/// `1e-9 · max(a, b, Σ N)` of the best count as ties, resolved in favour of
/// fewer parameters.
pub fn fit_model(ev: &EmpiricalVariogram, candidates: &[ModelFamily], seed: u64) -> Result<FittedModel> {
    let fits = fit_all(ev, candidates, seed)?;
    let best = fits.iter().map(|f| f.objective).fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(Error::FitFailed);
    }
    let total_pairs = ev.pair_counts.iter().sum::<usize>() as f64;
    fits.into_iter()
        .filter(|f| f.objective - best <= TIE_RELATIVE * f.objective.max(best).max(total_pairs))
        .min_by(|a, b| {
            a.family
                .n_params()
                .cmp(&b.family.n_params())
                .then(a.objective.total_cmp(&b.objective))
        })
        .ok_or(Error::FitFailed)
}
