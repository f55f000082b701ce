use std::fmt;
use std::io::Write;

use chrono::{Duration, NaiveDate};
use rayon::prelude::*;

use super::{error_moments, mape, pi_coverage, predict_site, ForecastRecord};
use crate::error::Result;
use crate::ingest::{DailySeries, Transform};
use crate::temporal::TemporalParams;

pub const REPORT_HEADER: [&str; 7] = ["period", "site_id", "mean", "std", "skewness", "kurtosis", "pct_outside_pi"];
pub const FORECAST_HEADER: [&str; 6] = ["site_id", "date", "point_mps", "pi_low_mps", "pi_high_mps", "observed_mps"];
pub const MAPE_HEADER: [&str; 6] = ["period", "site_id", "n", "model_mape_pct", "persistence_mape_pct", "improvement_pct"];

/// Periods with fewer scored forecasts are skipped.
pub const MIN_PERIOD_ERRORS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Period {
    InSample,
    OutOfSample,
}

impl Period {
    pub fn as_str(&self) -> &'static str {
        match self {
            Period::InSample => "in_sample",
            Period::OutOfSample => "out_of_sample",
        }
    }

    fn of(date: NaiveDate, split_date: NaiveDate) -> Self {
        if date < split_date {
            Period::InSample
        } else {
            Period::OutOfSample
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub period: Period,
    pub site_id: String,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub pct_outside_pi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapeRow {
    pub period: Period,
    pub site_id: String,
    pub n: usize,
    pub model_mape: f64,
    pub persistence_mape: f64,
}

impl MapeRow {
    /// Relative MAPE reduction against persistence, in percent.
    pub fn improvement_pct(&self) -> f64 {
        100.0 * (self.persistence_mape - self.model_mape) / self.persistence_mape
    }
}

/// A benchmark site: kriged parameters and the observed, height-scaled log
/// history at that location.
#[derive(Debug, Clone)]
pub struct BenchSite {
    pub site_id: String,
    pub params: TemporalParams,
    pub history: DailySeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteBenchmark {
    pub site_id: String,
    pub records: Vec<ForecastRecord>,
    pub rows: Vec<BenchmarkRow>,
    pub mape: Vec<MapeRow>,
    /// Periods without enough scored forecasts, with the reason.
    pub skipped: Vec<(Period, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub sites: Vec<SiteBenchmark>,
}

impl BenchmarkReport {
    /// In-sample rows for every site, then out-of-sample rows.
    pub fn rows(&self) -> Vec<&BenchmarkRow> {
        [Period::InSample, Period::OutOfSample]
            .iter()
            .flat_map(|p| self.sites.iter().flat_map(|s| &s.rows).filter(move |r| r.period == *p))
            .collect()
    }

    pub fn mape_rows(&self) -> Vec<&MapeRow> {
        [Period::InSample, Period::OutOfSample]
            .iter()
            .flat_map(|p| self.sites.iter().flat_map(|s| &s.mape).filter(move |r| r.period == *p))
            .collect()
    }

    pub fn skipped(&self) -> Vec<(&str, Period, &str)> {
        self.sites
            .iter()
            .flat_map(|s| s.skipped.iter().map(|(p, why)| (s.site_id.as_str(), *p, why.as_str())))
            .collect()
    }

    pub fn records(&self) -> impl Iterator<Item = &ForecastRecord> {
        self.sites.iter().flat_map(|s| &s.records)
    }
}

/// Days of `history` (log scale) whose two predecessors are observed.
pub fn forecastable_dates(history: &DailySeries) -> Vec<NaiveDate> {
    (2..history.len())
        .filter(|&i| history.values[i - 1].is_some() && history.values[i - 2].is_some())
        .map(|i| history.date_at(i))
        .collect()
}

fn bench_site(site: &BenchSite, split_date: NaiveDate) -> Result<SiteBenchmark> {
    site.history.expect(Transform::Log)?;
    let dates: Vec<NaiveDate> = forecastable_dates(&site.history)
        .into_iter()
        .filter(|d| site.history.value_on(*d).is_some())
        .collect();
    let records = predict_site(&site.params, &site.history, &dates)?;
    let mut out = SiteBenchmark {
        site_id: site.site_id.clone(),
        records: Vec::new(),
        rows: Vec::new(),
        mape: Vec::new(),
        skipped: Vec::new(),
    };
    for period in [Period::InSample, Period::OutOfSample] {
        let scored: Vec<&ForecastRecord> = records.iter().filter(|r| Period::of(r.date, split_date) == period).collect();
        if scored.len() < MIN_PERIOD_ERRORS {
            out.skipped.push((
                period,
                format!("{} scored forecasts, need at least {MIN_PERIOD_ERRORS}", scored.len()),
            ));
            continue;
        }
        let errors: Vec<f64> = scored.iter().filter_map(|r| r.log_error()).collect();
        let moments = error_moments(&errors)?;
        let owned: Vec<ForecastRecord> = scored.iter().map(|r| (*r).clone()).collect();
        out.rows.push(BenchmarkRow {
            period,
            site_id: site.site_id.clone(),
            mean: moments.mean,
            std: moments.std,
            skewness: moments.skewness,
            kurtosis: moments.kurtosis,
            pct_outside_pi: pi_coverage(&owned)?,
        });
        let actual: Vec<f64> = scored.iter().filter_map(|r| r.observed).collect();
        let model: Vec<f64> = scored.iter().map(|r| r.point).collect();
        let persistence: Vec<f64> = scored
            .iter()
            .map(|r| {
                site.history
                    .value_on(r.date - Duration::days(1))
                    .expect("forecast dates have an observed predecessor")
                    .exp()
            })
            .collect();
        out.mape.push(MapeRow {
            period,
            site_id: site.site_id.clone(),
            n: actual.len(),
            model_mape: mape(&model, &actual)?,
            persistence_mape: mape(&persistence, &actual)?,
        });
    }
    out.records = records;
    Ok(out)
}

/// Score rolling day-ahead forecasts at each site, split into periods before
/// and from `split_date`. Errors are on the log scale, MAPE on m/s.
pub fn benchmark_report(sites: &[BenchSite], split_date: NaiveDate) -> Result<BenchmarkReport> {
    let sites = sites
        .par_iter()
        .map(|s| bench_site(s, split_date))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkReport { sites })
}

pub fn write_report_csv<W: Write>(out: W, rows: &[&BenchmarkRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        w.write_record([
            r.period.as_str().to_string(),
            r.site_id.clone(),
            r.mean.to_string(),
            r.std.to_string(),
            r.skewness.to_string(),
            r.kurtosis.to_string(),
            r.pct_outside_pi.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mape_csv<W: Write>(out: W, rows: &[&MapeRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MAPE_HEADER)?;
    for r in rows {
        w.write_record([
            r.period.as_str().to_string(),
            r.site_id.clone(),
            r.n.to_string(),
            r.model_mape.to_string(),
            r.persistence_mape.to_string(),
            r.improvement_pct().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Missing observations are written as empty fields.
pub fn write_forecast_csv<'a, W: Write>(out: W, records: impl IntoIterator<Item = &'a ForecastRecord>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FORECAST_HEADER)?;
    for r in records {
        w.write_record([
            r.site_id.clone(),
            r.date.to_string(),
            r.point.to_string(),
            r.pi_low.to_string(),
            r.pi_high.to_string(),
            r.observed.map(|o| o.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;
    use crate::temporal::simulate_log_series;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn epoch() -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 2, 1).unwrap()
    }

    fn site(i: usize, n: usize) -> BenchSite {
        let mut a = [0.0; 13];
        a[0] = 1.5 + 0.05 * i as f64;
        a[1] = 0.3;
        a[4] = -0.05;
        let params = TemporalParams {
            a,
            alpha: [0.6, 0.1],
            b: [0.1, 0.03, 0.0],
            epoch_date: epoch(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let values = simulate_log_series(&params, 0, n, &mut rng);
        BenchSite {
            site_id: format!("K{i:03}"),
            history: DailySeries {
                site_id: format!("K{i:03}"),
                site: GeoPoint::new(33.0 + 0.1 * i as f64, -117.0).unwrap(),
                epoch_date: epoch(),
                start_date: epoch(),
                values: values.into_iter().map(Some).collect(),
                transform: Transform::Log,
            },
            params,
        }
    }

    #[test]
    fn seven_sites_give_fourteen_rows() {
        let sites: Vec<BenchSite> = (0..7).map(|i| site(i, 1400)).collect();
        let split = epoch() + Duration::days(1000);
        let report = benchmark_report(&sites, split).unwrap();
        let rows = report.rows();
        assert_eq!(rows.len(), 14);
        assert!(rows[..7].iter().all(|r| r.period == Period::InSample));
        assert_eq!(rows[7].site_id, "K000");
        for r in rows {
            assert!(r.mean.abs() < 0.05, "{r:?}");
            assert!((1.0..=9.0).contains(&r.pct_outside_pi), "{r:?}");
        }
        for m in report.mape_rows() {
            assert!(m.model_mape < m.persistence_mape, "{m:?}");
        }
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &report.rows()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("period,site_id,mean,std,skewness,kurtosis,pct_outside_pi\nin_sample,K000,"));
    }

    #[test]
    fn early_split_skips_in_sample() {
        let sites = vec![site(0, 200)];
        let report = benchmark_report(&sites, epoch() - Duration::days(5)).unwrap();
        assert_eq!(report.rows().len(), 1);
        assert_eq!(report.skipped()[0].1, Period::InSample);
    }

    #[test]
    fn forecast_csv_leaves_missing_observation_empty() {
        let r = ForecastRecord {
            site_id: "KSAN".into(),
            date: epoch(),
            point: 4.5,
            pi_low: 2.0,
            pi_high: 9.0,
            observed: None,
        };
        let mut buf = Vec::new();
        write_forecast_csv(&mut buf, [&r]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "site_id,date,point_mps,pi_low_mps,pi_high_mps,observed_mps\nKSAN,2015-02-01,4.5,2,9,\n"
        );
    }
}
