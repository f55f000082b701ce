//! Per-site temporal model for daily log wind speed.
//!
//! `W(t) = S(t) + A(t) + σ(t)·ε(t)` with a six-harmonic annual Fourier mean
//! `S`, an AR(2) term `A` on the deseasonalized series, a one-harmonic
//! seasonal variance `σ²(t) = b0 + b1 cos + b2 sin`, and `ε ~ N(0, 1)`.
//! The three stages are fitted in order by ordinary least squares.
//!
//! Day index `t` counts days from a study-wide epoch date, so Fourier phases
//! are comparable between sites.

mod diagnostics;
mod simulate;

pub use diagnostics::{acf, aic, compare_ar_orders, gaussian_aic, ks_statistic, ks_test_normal, normal_cdf, pacf,
                      ArOrderAic, KsResult, KS_CRITICAL_5PCT};
pub use simulate::simulate_log_series;

use std::f64::consts::PI;

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ingest::{DailySeries, Transform};

pub const YEAR_DAYS: f64 = 365.25;
pub const N_HARMONICS: usize = 6;
pub const N_SEASONAL: usize = 2 * N_HARMONICS + 1;
pub const N_PARAMS: usize = N_SEASONAL + 2 + 3;
/// Two-sided 95% Gaussian quantile.
pub const PI_Z: f64 = 1.96;
/// Minimum seasonal variance kept after shrinking, as a fraction of b0.
pub const VARIANCE_FLOOR_FRACTION: f64 = 0.05;
pub const MIN_AR_LEN: usize = 100;

pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "a9", "a10", "a11", "a12", "alpha1", "alpha2", "b0", "b1",
    "b2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalParams {
    /// Seasonal mean: a0, then (cos, sin) coefficient pairs for harmonics 1..=6.
    pub a: [f64; N_SEASONAL],
    pub alpha: [f64; 2],
    /// Seasonal variance: b0, b1 (cos), b2 (sin).
    pub b: [f64; 3],
    pub epoch_date: NaiveDate,
}

impl TemporalParams {
    pub fn seasonal(&self, t: f64) -> f64 {
        seasonal_row(t).iter().zip(&self.a).map(|(x, a)| x * a).sum()
    }

    pub fn variance(&self, t: f64) -> f64 {
        let w = 2.0 * PI * t / YEAR_DAYS;
        self.b[0] + self.b[1] * w.cos() + self.b[2] * w.sin()
    }

    /// Smallest seasonal variance over a period, in closed form.
    pub fn min_variance(&self) -> f64 {
        self.b[0] - self.b[1].hypot(self.b[2])
    }

    /// Roots of `1 - α1 z - α2 z²` outside the unit circle.
    pub fn is_stationary(&self) -> bool {
        ar2_is_stationary(self.alpha[0], self.alpha[1])
    }

    pub fn to_array(&self) -> [f64; N_PARAMS] {
        let mut out = [0.0; N_PARAMS];
        out[..N_SEASONAL].copy_from_slice(&self.a);
        out[N_SEASONAL..N_SEASONAL + 2].copy_from_slice(&self.alpha);
        out[N_SEASONAL + 2..].copy_from_slice(&self.b);
        out
    }

    pub fn from_array(values: &[f64; N_PARAMS], epoch_date: NaiveDate) -> Self {
        let mut a = [0.0; N_SEASONAL];
        a.copy_from_slice(&values[..N_SEASONAL]);
        Self {
            a,
            alpha: [values[N_SEASONAL], values[N_SEASONAL + 1]],
            b: [values[N_SEASONAL + 2], values[N_SEASONAL + 3], values[N_SEASONAL + 4]],
            epoch_date,
        }
    }
}

/// Stationarity triangle for AR(2); equivalent to both characteristic roots
/// lying outside the unit circle.
pub fn ar2_is_stationary(alpha1: f64, alpha2: f64) -> bool {
    alpha1 + alpha2 < 1.0 && alpha2 - alpha1 < 1.0 && alpha2.abs() < 1.0
}

pub fn eval_seasonal(p: &TemporalParams, t: f64) -> f64 {
    p.seasonal(t)
}

fn seasonal_row(t: f64) -> [f64; N_SEASONAL] {
    let mut row = [0.0; N_SEASONAL];
    row[0] = 1.0;
    let w = 2.0 * PI * t / YEAR_DAYS;
    for i in 1..=N_HARMONICS {
        let (s, c) = (i as f64 * w).sin_cos();
        row[2 * i - 1] = c;
        row[2 * i] = s;
    }
    row
}

/// Least squares via Householder QR. Fails when a diagonal entry of R is
/// negligible relative to the largest one.
fn ols(design: &DMatrix<f64>, y: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let (n, k) = design.shape();
    if n < k {
        return Err(Error::RankDeficient(format!("{what}: {n} rows for {k} columns")));
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_diag == 0.0 || r.diagonal().iter().any(|v| v.abs() <= 1e-10 * max_diag) {
        return Err(Error::RankDeficient(what.to_string()));
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient(what.to_string()))
}

fn log_values(s: &DailySeries) -> Result<Vec<f64>> {
    if s.transform != Transform::Log {
        return Err(Error::TransformMismatch {
            expected: Transform::Log.as_str(),
            found: s.transform.as_str(),
        });
    }
    s.complete_values()
}

/// OLS fit of the 13 seasonal coefficients to a complete log series.
pub fn fit_seasonal(s: &DailySeries) -> Result<[f64; N_SEASONAL]> {
    fit_seasonal_values(s.first_day_index(), &log_values(s)?)
}

/// Seasonal OLS on values observed at day indices `t0, t0 + 1, ...`.
pub fn fit_seasonal_values(t0: i64, y: &[f64]) -> Result<[f64; N_SEASONAL]> {
    let needed = 2 * N_SEASONAL + 1;
    if y.len() < needed {
        return Err(Error::SeriesTooShort { needed, got: y.len() });
    }
    let design = DMatrix::from_fn(y.len(), N_SEASONAL, |i, j| seasonal_row((t0 + i as i64) as f64)[j]);
    let coef = ols(&design, &DVector::from_column_slice(y), "seasonal design")?;
    let mut a = [0.0; N_SEASONAL];
    a.copy_from_slice(coef.as_slice());
    Ok(a)
}

fn seasonal_of(a: &[f64; N_SEASONAL], t: f64) -> f64 {
    seasonal_row(t).iter().zip(a).map(|(x, c)| x * c).sum()
}

pub fn deseasonalize(a: &[f64; N_SEASONAL], t0: i64, y: &[f64]) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(i, v)| v - seasonal_of(a, (t0 + i as i64) as f64))
        .collect()
}

pub fn reseasonalize(a: &[f64; N_SEASONAL], t0: i64, x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, v)| v + seasonal_of(a, (t0 + i as i64) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar2Fit {
    pub alpha: [f64; 2],
    pub stationary: bool,
}

/// OLS regression of `x(t)` on `x(t-1), x(t-2)` without intercept.
pub fn fit_ar2(x: &[f64]) -> Result<Ar2Fit> {
    if x.len() < MIN_AR_LEN {
        return Err(Error::SeriesTooShort {
            needed: MIN_AR_LEN,
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("AR input"));
    }
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale <= 1e-10 {
        return Err(Error::SingularDesign("series is numerically constant".into()));
    }
    let (mut g11, mut g12, mut g22, mut c1, mut c2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 2..x.len() {
        let (y, l1, l2) = (x[t] / scale, x[t - 1] / scale, x[t - 2] / scale);
        g11 += l1 * l1;
        g12 += l1 * l2;
        g22 += l2 * l2;
        c1 += l1 * y;
        c2 += l2 * y;
    }
    // Eigenvalues of the symmetric 2x2 Gram matrix.
    let mean = 0.5 * (g11 + g22);
    let spread = (0.25 * (g11 - g22).powi(2) + g12 * g12).sqrt();
    let (lmax, lmin) = (mean + spread, mean - spread);
    if lmax <= 0.0 || lmin <= 1e-10 * lmax {
        return Err(Error::SingularDesign(format!("lag Gram matrix condition {:.3e}", lmax / lmin.max(0.0))));
    }
    let det = g11 * g22 - g12 * g12;
    let alpha1 = (g22 * c1 - g12 * c2) / det;
    let alpha2 = (g11 * c2 - g12 * c1) / det;
    Ok(Ar2Fit {
        alpha: [alpha1, alpha2],
        stationary: ar2_is_stationary(alpha1, alpha2),
    })
}

/// Residuals `x(t) - α1 x(t-1) - α2 x(t-2)` for t = 2..n.
pub fn ar2_residuals(x: &[f64], alpha: [f64; 2]) -> Vec<f64> {
    (2..x.len())
        .map(|t| x[t] - alpha[0] * x[t - 1] - alpha[1] * x[t - 2])
        .collect()
}

/// Shrink (b1, b2) radially when the seasonal variance would dip to zero or
/// below, so its minimum over a period becomes the floor fraction of b0.
pub fn enforce_variance_floor(b: [f64; 3]) -> Result<[f64; 3]> {
    if !(b[0] > 0.0) {
        return Err(Error::DegenerateVariance(b[0]));
    }
    let amplitude = b[1].hypot(b[2]);
    if b[0] - amplitude > 0.0 {
        return Ok(b);
    }
    let factor = (1.0 - VARIANCE_FLOOR_FRACTION) * b[0] / amplitude;
    Ok([b[0], b[1] * factor, b[2] * factor])
}

/// OLS of squared AR residuals (observed at day indices `t0, t0 + 1, ...`)
/// on `{1, cos, sin}` of the annual cycle, followed by the positivity floor.
pub fn fit_seasonal_variance(t0: i64, r: &[f64]) -> Result<[f64; 3]> {
    if r.len() < 4 {
        return Err(Error::SeriesTooShort { needed: 4, got: r.len() });
    }
    let design = DMatrix::from_fn(r.len(), 3, |i, j| {
        let w = 2.0 * PI * (t0 + i as i64) as f64 / YEAR_DAYS;
        match j {
            0 => 1.0,
            1 => w.cos(),
            _ => w.sin(),
        }
    });
    let y = DVector::from_iterator(r.len(), r.iter().map(|v| v * v));
    let coef = ols(&design, &y, "seasonal variance design")?;
    enforce_variance_floor([coef[0], coef[1], coef[2]])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub params: TemporalParams,
    /// Standardized final residuals ε̂(t) = r(t)/σ(t), one per day from the third on.
    pub residuals: Vec<f64>,
    /// Day index of `residuals[0]`.
    pub first_residual_day: i64,
    pub ks_statistic: f64,
    pub ks_reject_5pct: bool,
    pub aic: f64,
    pub stationary: bool,
}

/// Fit the full staged model: seasonal mean, AR(2), seasonal variance, then
/// standardize residuals and compute KS and AIC diagnostics.
pub fn fit_temporal_model(s: &DailySeries) -> Result<FitReport> {
    let y = log_values(s)?;
    let t0 = s.first_day_index();
    let a = fit_seasonal_values(t0, &y)?;
    let x = deseasonalize(&a, t0, &y);
    let ar = fit_ar2(&x)?;
    let r = ar2_residuals(&x, ar.alpha);
    let t_first = t0 + 2;
    let b = fit_seasonal_variance(t_first, &r)?;
    let params = TemporalParams {
        a,
        alpha: ar.alpha,
        b,
        epoch_date: s.epoch_date,
    };
    let residuals: Vec<f64> = r
        .iter()
        .enumerate()
        .map(|(i, v)| v / params.variance((t_first + i as i64) as f64).sqrt())
        .collect();
    let ks = ks_test_normal(&residuals)?;
    let mut report = FitReport {
        params,
        residuals,
        first_residual_day: t_first,
        ks_statistic: ks.statistic,
        ks_reject_5pct: ks.reject_5pct,
        aic: f64::NAN,
        stationary: ar.stationary,
    };
    report.aic = aic(&report);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayAheadForecast {
    /// Predicted log speed Ŵ(t+1).
    pub log_mean: f64,
    pub sigma: f64,
    pub point: f64,
    pub pi_low: f64,
    pub pi_high: f64,
}

/// One-day-ahead forecast for day `t + 1` from log observations on days `t`
/// and `t - 1`; the interval is the exponentiated Gaussian 95% interval.
pub fn forecast_one_day(p: &TemporalParams, w_t: f64, w_tm1: f64, t: i64) -> Result<DayAheadForecast> {
    if !w_t.is_finite() || !w_tm1.is_finite() {
        return Err(Error::NonFinite("forecast lag values"));
    }
    let tf = t as f64;
    let log_mean = p.seasonal(tf + 1.0)
        + p.alpha[0] * (w_t - p.seasonal(tf))
        + p.alpha[1] * (w_tm1 - p.seasonal(tf - 1.0));
    let variance = p.variance(tf + 1.0);
    if !(variance > 0.0) || !log_mean.is_finite() {
        return Err(Error::NonFinite("forecast variance or mean"));
    }
    let sigma = variance.sqrt();
    Ok(DayAheadForecast {
        log_mean,
        sigma,
        point: log_mean.exp(),
        pi_low: (log_mean - PI_Z * sigma).exp(),
        pi_high: (log_mean + PI_Z * sigma).exp(),
    })
}
