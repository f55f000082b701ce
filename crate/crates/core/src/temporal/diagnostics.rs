//! Residual diagnostics: autocorrelation, KS normality test, AIC.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use statrs::function::erf::erfc;

use super::{deseasonalize, fit_seasonal_values, fit_seasonal_variance, FitReport, TemporalParams, N_PARAMS,
            N_SEASONAL};
use crate::error::{Error, Result};
use crate::ingest::DailySeries;

/// Asymptotic 5% critical value of `√n · D`.
pub const KS_CRITICAL_5PCT: f64 = 1.358;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Sample autocorrelations at lags `0..=max_lag` (mean removed, divisor N).
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if x.len() <= max_lag {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 1,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let c0 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if !(c0 > 0.0) {
        return Err(Error::ZeroVariance("autocorrelation input"));
    }
    Ok((0..=max_lag)
        .map(|k| {
            let ck: f64 = x[k..].iter().zip(x).map(|(a, b)| (a - mean) * (b - mean)).sum::<f64>() / n;
            if k == 0 {
                1.0
            } else {
                ck / c0
            }
        })
        .collect())
}

/// Partial autocorrelations at lags `0..=max_lag` via Durbin–Levinson;
/// element 0 is 1 by convention.
pub fn pacf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let r = acf(x, max_lag)?;
    let mut out = vec![1.0];
    let mut phi: Vec<f64> = Vec::new();
    for k in 1..=max_lag {
        let num = r[k] - (1..k).map(|j| phi[j - 1] * r[k - j]).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * r[j]).sum::<f64>();
        let phi_kk = num / den;
        let mut next: Vec<f64> = (1..k).map(|j| phi[j - 1] - phi_kk * phi[k - j - 1]).collect();
        next.push(phi_kk);
        phi = next;
        out.push(phi_kk);
    }
    Ok(out)
}

/// `sup |F_n - Φ|` against the standard normal.
pub fn ks_statistic(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub reject_5pct: bool,
}

pub fn ks_test_normal(eps: &[f64]) -> Result<KsResult> {
    if eps.len() < 30 {
        return Err(Error::SeriesTooShort { needed: 30, got: eps.len() });
    }
    if eps.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("KS sample"));
    }
    let statistic = ks_statistic(eps);
    Ok(KsResult {
        statistic,
        reject_5pct: statistic > KS_CRITICAL_5PCT / (eps.len() as f64).sqrt(),
    })
}

/// `2k - 2·loglik` for independent Gaussian residuals with the given variances.
pub fn gaussian_aic(residuals: &[f64], variances: &[f64], k: usize) -> f64 {
    let loglik: f64 = residuals
        .iter()
        .zip(variances)
        .map(|(r, v)| -0.5 * (2.0 * PI * v).ln() - r * r / (2.0 * v))
        .sum();
    2.0 * k as f64 - 2.0 * loglik
}

/// AIC of a fitted model with all 18 parameters counted.
pub fn aic(report: &FitReport) -> f64 {
    let (residuals, variances) = raw_residuals(&report.params, report.first_residual_day, &report.residuals);
    gaussian_aic(&residuals, &variances, N_PARAMS)
}

fn raw_residuals(p: &TemporalParams, t0: i64, eps: &[f64]) -> (Vec<f64>, Vec<f64>) {
    eps.iter()
        .enumerate()
        .map(|(i, e)| {
            let v = p.variance((t0 + i as i64) as f64);
            (e * v.sqrt(), v)
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArOrderAic {
    pub order: usize,
    pub aic: f64,
}

/// AIC of the seasonal + AR(p) + seasonal-variance model for each order,
/// all evaluated on the same sample (days after the largest order).
pub fn compare_ar_orders(s: &DailySeries, orders: &[usize]) -> Result<Vec<ArOrderAic>> {
    let y = s.complete_values()?;
    let t0 = s.first_day_index();
    let a = fit_seasonal_values(t0, &y)?;
    let x = deseasonalize(&a, t0, &y);
    let max_p = orders.iter().copied().max().unwrap_or(0);
    if x.len() < max_p + super::MIN_AR_LEN {
        return Err(Error::SeriesTooShort {
            needed: max_p + super::MIN_AR_LEN,
            got: x.len(),
        });
    }
    let rows = x.len() - max_p;
    orders
        .iter()
        .map(|&p| {
            let target = DVector::from_column_slice(&x[max_p..]);
            let residuals: Vec<f64> = if p == 0 {
                target.iter().copied().collect()
            } else {
                let design = DMatrix::from_fn(rows, p, |i, j| x[max_p + i - j - 1]);
                let coef = super::ols(&design, &target, "AR design")?;
                (target - design * coef).iter().copied().collect()
            };
            let first_day = t0 + max_p as i64;
            let b = fit_seasonal_variance(first_day, &residuals)?;
            let probe = TemporalParams {
                a,
                alpha: [0.0; 2],
                b,
                epoch_date: s.epoch_date,
            };
            let variances: Vec<f64> = (0..rows).map(|i| probe.variance((first_day + i as i64) as f64)).collect();
            Ok(ArOrderAic {
                order: p,
                aic: gaussian_aic(&residuals, &variances, N_SEASONAL + p + 3),
            })
        })
        .collect()
}
