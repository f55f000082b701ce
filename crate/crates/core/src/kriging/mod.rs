//! Ordinary kriging with a global neighbourhood.
//!
//! The bordered system `[Γ 1; 1ᵀ 0] [λ; m] = [γ₀; 1]` depends on the target
//! only through its right-hand side, so [`KrigingSystem`] factors it once and
//! answers any number of targets.

mod params;
mod surface;

pub use params::{krige_params_at, read_theta_csv, write_theta_csv, ParamKriger, SiteFit, THETA_HEADER};
pub use surface::{krige_parameter_surface, write_surfaces_csv, ParamSurface, SURFACE_HEADER};

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::geo::{haversine_km, GeoPoint};
use crate::variogram::VariogramModel;

/// Largest accepted 2-norm condition number of the (normalised) system.
pub const MAX_CONDITION: f64 = 1e12;
/// Largest accepted `‖Γx - rhs‖ / ‖rhs‖`.
pub const MAX_RELATIVE_RESIDUAL: f64 = 1e-8;
/// Kriging variances in `[-SIGMA2_TOLERANCE, 0)` are clamped to zero.
pub const SIGMA2_TOLERANCE: f64 = 1e-8;

/// Value placed on the diagonal of Γ (and used for a target that coincides
/// with a data site).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalConvention {
    /// `Γᵢᵢ = η`, the nugget variance on the diagonal.
    #[default]
    Nugget,
    /// `Γᵢᵢ = γ(0) = 0`: classical exact interpolation.
    Zero,
}

impl DiagonalConvention {
    fn value(&self, m: &VariogramModel) -> f64 {
        match self {
            DiagonalConvention::Nugget => m.nugget,
            DiagonalConvention::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrigingSolution {
    pub weights: Vec<f64>,
    pub lagrange_m: f64,
    pub sigma2: f64,
}

/// `Γ` and the right-hand side for target `s0`.
pub fn assemble_system(
    m: &VariogramModel,
    sites: &[GeoPoint],
    s0: GeoPoint,
    convention: DiagonalConvention,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_sites(sites)?;
    let diag = convention.value(m);
    Ok((bordered_matrix(m, sites, diag), rhs_for(m, sites, s0, diag)))
}

fn check_sites(sites: &[GeoPoint]) -> Result<()> {
    if sites.is_empty() {
        return Err(Error::EmptyInput("kriging sites"));
    }
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            if sites[i] == sites[j] || haversine_km(sites[i], sites[j]) == 0.0 {
                return Err(Error::DuplicateSites(i, j));
            }
        }
    }
    Ok(())
}

fn bordered_matrix(m: &VariogramModel, sites: &[GeoPoint], diag: f64) -> DMatrix<f64> {
    let n = sites.len();
    let mut g = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        g[(i, i)] = diag;
        for j in i + 1..n {
            let v = m.gamma(haversine_km(sites[i], sites[j]));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g[(i, n)] = 1.0;
        g[(n, i)] = 1.0;
    }
    g
}

fn rhs_from_distances(m: &VariogramModel, d: &[f64], diag: f64) -> DVector<f64> {
    let n = d.len();
    DVector::from_fn(n + 1, |i, _| {
        if i == n {
            1.0
        } else if d[i] == 0.0 {
            diag
        } else {
            m.gamma(d[i])
        }
    })
}

fn rhs_for(m: &VariogramModel, sites: &[GeoPoint], s0: GeoPoint, diag: f64) -> DVector<f64> {
    let d: Vec<f64> = sites.iter().map(|s| haversine_km(*s, s0)).collect();
    rhs_from_distances(m, &d, diag)
}

enum Solver {
    /// LU of the system with the variogram block divided by `scale`.
    Lu { lu: LU<f64, Dyn, Dyn>, scaled: DMatrix<f64> },
    /// Constant variogram block (pure nugget on the diagonal): every
    /// admissible weight vector is optimal; the minimum-norm one is uniform.
    Uniform,
}

/// A factored bordered kriging matrix, reusable across right-hand sides.
pub struct OkFactorization {
    gamma: DMatrix<f64>,
    scale: f64,
    condition: f64,
    solver: Solver,
}

impl OkFactorization {
    pub fn new(gamma: DMatrix<f64>) -> Result<Self> {
        let n1 = gamma.nrows();
        if n1 < 2 || gamma.ncols() != n1 {
            return Err(Error::LengthMismatch(format!(
                "kriging matrix must be square with n ≥ 1 sites, got {}×{}",
                gamma.nrows(),
                gamma.ncols()
            )));
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kriging matrix"));
        }
        let n = n1 - 1;
        let inner = gamma.view((0, 0), (n, n));
        let scale = inner.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let first = inner[(0, 0)];
        if n >= 2 && inner.iter().all(|v| *v == first) {
            return Ok(Self {
                gamma,
                scale,
                condition: f64::INFINITY,
                solver: Solver::Uniform,
            });
        }
        let mut scaled = gamma.clone();
        scaled.view_mut((0, 0), (n, n)).unscale_mut(scale);
        let sv = scaled.singular_values();
        let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), v| (a.max(*v), b.min(*v)));
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned(condition));
        }
        Ok(Self {
            gamma,
            scale,
            condition,
            solver: Solver::Lu {
                lu: scaled.clone().lu(),
                scaled,
            },
        })
    }

    pub fn n_sites(&self) -> usize {
        self.gamma.nrows() - 1
    }

    /// 2-norm condition number of the normalised system; infinite for the
    /// uniform-weight case.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Result<KrigingSolution> {
        let n = self.n_sites();
        if rhs.len() != n + 1 {
            return Err(Error::LengthMismatch(format!("rhs has {} entries, expected {}", rhs.len(), n + 1)));
        }
        let (weights, lagrange_m) = match &self.solver {
            Solver::Uniform => {
                let w = 1.0 / n as f64;
                let mean_rhs = rhs.rows(0, n).iter().sum::<f64>() / n as f64;
                (vec![w; n], mean_rhs - self.gamma[(0, 0)])
            }
            Solver::Lu { lu, scaled } => {
                let mut b = rhs.clone();
                b.rows_mut(0, n).unscale_mut(self.scale);
                let mut x = lu.solve(&b).ok_or(Error::IllConditioned(f64::INFINITY))?;
                let r = &b - scaled * &x;
                if let Some(dx) = lu.solve(&r) {
                    x += dx;
                }
                (x.rows(0, n).iter().copied().collect(), x[n] * self.scale)
            }
        };
        let x = DVector::from_iterator(n + 1, weights.iter().copied().chain([lagrange_m]));
        let residual = (&self.gamma * &x - rhs).norm() / rhs.norm();
        if !(residual < MAX_RELATIVE_RESIDUAL) {
            return Err(Error::SolveResidual(residual));
        }
        let raw = weights.iter().zip(rhs.iter()).map(|(l, g)| l * g).sum::<f64>() + lagrange_m - self.gamma[(0, 0)];
        let sigma2 = if raw >= 0.0 {
            raw
        } else if raw >= -SIGMA2_TOLERANCE {
            0.0
        } else {
            return Err(Error::NegativeKrigingVariance(raw));
        };
        Ok(KrigingSolution {
            weights,
            lagrange_m,
            sigma2,
        })
    }
}

/// Solve an assembled bordered system. The kriging variance is
/// `Σλᵢ rhsᵢ + m - Γ₁₁`, i.e. the diagonal convention is read from Γ.
pub fn solve_ok(gamma: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<KrigingSolution> {
    OkFactorization::new(gamma.clone())?.solve(rhs)
}

/// Kriging setup for one variogram model and site set.
pub struct KrigingSystem {
    model: VariogramModel,
    sites: Vec<GeoPoint>,
    diag: f64,
    factorization: OkFactorization,
}

impl KrigingSystem {
    pub fn new(model: &VariogramModel, sites: &[GeoPoint], convention: DiagonalConvention) -> Result<Self> {
        check_sites(sites)?;
        let diag = convention.value(model);
        Ok(Self {
            factorization: OkFactorization::new(bordered_matrix(model, sites, diag))?,
            model: model.clone(),
            sites: sites.to_vec(),
            diag,
        })
    }

    pub fn sites(&self) -> &[GeoPoint] {
        &self.sites
    }

    pub fn model(&self) -> &VariogramModel {
        &self.model
    }

    pub fn factorization(&self) -> &OkFactorization {
        &self.factorization
    }

    pub fn rhs(&self, s0: GeoPoint) -> DVector<f64> {
        rhs_for(&self.model, &self.sites, s0, self.diag)
    }

    pub fn solve_at(&self, s0: GeoPoint) -> Result<KrigingSolution> {
        self.factorization.solve(&self.rhs(s0))
    }

    /// As [`solve_at`](Self::solve_at) with precomputed site-to-target distances.
    pub fn solve_at_distances(&self, d: &[f64]) -> Result<KrigingSolution> {
        if d.len() != self.sites.len() {
            return Err(Error::LengthMismatch(format!("{} distances for {} sites", d.len(), self.sites.len())));
        }
        self.factorization.solve(&rhs_from_distances(&self.model, d, self.diag))
    }

    /// `(Σλᵢyᵢ, σ²)`.
    pub fn estimate(&self, y: &[f64], s0: GeoPoint) -> Result<(f64, f64)> {
        let sol = self.solve_at(s0)?;
        Ok((weighted_sum(&sol.weights, y)?, sol.sigma2))
    }
}

pub(crate) fn weighted_sum(w: &[f64], y: &[f64]) -> Result<f64> {
    if w.len() != y.len() {
        return Err(Error::LengthMismatch(format!("{} weights, {} values", w.len(), y.len())));
    }
    Ok(w.iter().zip(y).map(|(a, b)| a * b).sum())
}

/// Ordinary-kriging estimate and variance at `s0` with the nugget diagonal.
pub fn krige_value(m: &VariogramModel, sites: &[GeoPoint], y: &[f64], s0: GeoPoint) -> Result<(f64, f64)> {
    if sites.len() != y.len() {
        return Err(Error::LengthMismatch(format!("{} sites, {} values", sites.len(), y.len())));
    }
    KrigingSystem::new(m, sites, DiagonalConvention::Nugget)?.estimate(y, s0)
}
