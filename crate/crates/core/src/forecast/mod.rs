//! Day-ahead forecasts at arbitrary sites and their evaluation.

mod bench;

pub use bench::{
    benchmark_report, forecastable_dates, write_forecast_csv, write_mape_csv, write_report_csv, BenchSite, BenchmarkReport, BenchmarkRow,
    MapeRow, Period, SiteBenchmark, FORECAST_HEADER, MAPE_HEADER, MIN_PERIOD_ERRORS, REPORT_HEADER,
};

use chrono::{Duration, NaiveDate};

use crate::error::{Error, Result};
use crate::ingest::{DailySeries, Transform};
use crate::temporal::{forecast_one_day, TemporalParams};

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRecord {
    pub site_id: String,
    pub date: NaiveDate,
    /// Median speed `exp(Ŵ)`, m/s.
    pub point: f64,
    pub pi_low: f64,
    pub pi_high: f64,
    pub observed: Option<f64>,
}

impl ForecastRecord {
    /// `Ŵ - log(observed)`.
    pub fn log_error(&self) -> Option<f64> {
        self.observed.map(|o| self.point.ln() - o.ln())
    }
}

/// Rolling one-day-ahead forecasts for `dates`, using the site's own log
/// history on the two preceding days as AR lags. `observed` is filled from
/// the history where available.
pub fn predict_site(p: &TemporalParams, history: &DailySeries, dates: &[NaiveDate]) -> Result<Vec<ForecastRecord>> {
    history.expect(Transform::Log)?;
    let mut missing: Vec<NaiveDate> = dates
        .iter()
        .flat_map(|d| [*d - Duration::days(2), *d - Duration::days(1)])
        .filter(|d| history.value_on(*d).is_none())
        .collect();
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::MissingLags(missing));
    }
    dates
        .iter()
        .map(|&date| {
            let prev = date - Duration::days(1);
            let w_t = history.value_on(prev).expect("checked above");
            let w_tm1 = history.value_on(date - Duration::days(2)).expect("checked above");
            let t = (prev - p.epoch_date).num_days();
            let f = forecast_one_day(p, w_t, w_tm1, t)?;
            Ok(ForecastRecord {
                site_id: history.site_id.clone(),
                date,
                point: f.point,
                pi_low: f.pi_low,
                pi_high: f.pi_high,
                observed: history.value_on(date).map(f64::exp),
            })
        })
        .collect()
}

/// Every day whose predecessor is observed, forecast as that predecessor.
pub fn persistence_forecast(history: &DailySeries) -> Result<Vec<(NaiveDate, f64)>> {
    history.expect(Transform::Raw)?;
    Ok((1..history.len())
        .filter_map(|i| history.values[i - 1].map(|v| (history.date_at(i), v)))
        .collect())
}

/// Mean absolute percentage error, in percent.
pub fn mape(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch(format!("{} predictions, {} actuals", pred.len(), actual.len())));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput("MAPE input"));
    }
    if let Some(i) = actual.iter().position(|a| *a == 0.0) {
        return Err(Error::ZeroActual(i));
    }
    Ok(100.0 * pred.iter().zip(actual).map(|(p, a)| ((p - a) / a).abs()).sum::<f64>() / pred.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMoments {
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    /// Raw (non-excess) kurtosis, 3 for a Gaussian.
    pub kurtosis: f64,
}

/// Population moments of an error sample.
pub fn error_moments(errors: &[f64]) -> Result<ErrorMoments> {
    if errors.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: errors.len(),
        });
    }
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let central = |k: i32| errors.iter().map(|e| (e - mean).powi(k)).sum::<f64>() / n;
    let m2 = central(2);
    if !(m2 > 0.0) || errors.iter().all(|e| *e == errors[0]) {
        return Err(Error::ZeroVariance("forecast errors"));
    }
    Ok(ErrorMoments {
        mean,
        std: m2.sqrt(),
        skewness: central(3) / m2.powf(1.5),
        kurtosis: central(4) / (m2 * m2),
    })
}

/// Percentage of observed values outside `[pi_low, pi_high]`; records
/// without an observation are ignored.
pub fn pi_coverage(records: &[ForecastRecord]) -> Result<f64> {
    let (outside, n) = records
        .iter()
        .filter_map(|r| r.observed.map(|o| o < r.pi_low || o > r.pi_high))
        .fold((0usize, 0usize), |(o, n), out| (o + out as usize, n + 1));
    if n == 0 {
        return Err(Error::EmptyInput("observed values for PI coverage"));
    }
    Ok(100.0 * outside as f64 / n as f64)
}
