//! Daily wind-speed series from forecast releases and station reports.
//!
//! Forecast releases arrive every six hours; the first six lead hours of each
//! release are spliced into an hourly series, hourly resultant speeds are
//! averaged into UTC calendar days, and the daily means are log-transformed.
//! Station reports (knots, 10 m) go through the same daily averaging and are
//! lifted to model height with the log wind profile.

pub mod csv_io;

pub use csv_io::{read_forecast_csv, read_station_csv, write_series_csv};

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Duration, NaiveDate, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

/// Metres per second in one knot.
pub const KNOT_MPS: f64 = 0.514444;
/// Roughness length of an airport runway, in metres.
pub const DEFAULT_Z0_M: f64 = 0.0024;
/// Minimum hours present before a daily mean is reported.
pub const MIN_HOURS_PER_DAY: usize = 18;
/// Lead hours taken from each release before the next one supersedes it.
pub const SPLICE_LEADS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadValue {
    pub lead_hour: u32,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastRelease {
    pub site_id: String,
    pub site: GeoPoint,
    pub release_time: DateTime<Utc>,
    pub leads: Vec<LeadValue>,
}

impl ForecastRelease {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidRelease {
            time: self.release_time.to_rfc3339(),
            reason,
        };
        let t = self.release_time;
        if t.minute() != 0 || t.second() != 0 || t.nanosecond() != 0 || !t.hour().is_multiple_of(6) {
            return Err(bad("release time must be 00, 06, 12 or 18 UTC on the hour".into()));
        }
        if self.leads.windows(2).any(|w| w[1].lead_hour <= w[0].lead_hour) {
            return Err(bad("lead hours not strictly increasing".into()));
        }
        for h in 0..SPLICE_LEADS {
            if !self.leads.iter().any(|l| l.lead_hour == h) {
                return Err(bad(format!("lead hour {h} missing")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationReport {
    pub site_id: String,
    pub site: GeoPoint,
    pub timestamp: DateTime<Utc>,
    pub wind_speed_kt: f64,
}

/// Hourly speeds in m/s covering whole UTC days from `start` (a midnight).
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub site_id: String,
    pub site: GeoPoint,
    pub start: DateTime<Utc>,
    pub values: Vec<Option<f64>>,
}

impl HourlySeries {
    pub fn start_date(&self) -> NaiveDate {
        self.start.date_naive()
    }

    /// Number of hours present in each UTC day.
    pub fn hours_present_per_day(&self) -> Vec<usize> {
        self.values
            .chunks(24)
            .map(|day| day.iter().filter(|v| v.is_some()).count())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    Raw,
    Log,
}

impl Transform {
    pub fn as_str(&self) -> &'static str {
        match self {
            Transform::Raw => "raw",
            Transform::Log => "log",
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A contiguous daily series. `values[i]` belongs to `start_date + i` days,
/// whose model day index is `(start_date - epoch_date) + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    pub site_id: String,
    pub site: GeoPoint,
    pub epoch_date: NaiveDate,
    pub start_date: NaiveDate,
    pub values: Vec<Option<f64>>,
    pub transform: Transform,
}

impl DailySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Day index of `values[0]` relative to the epoch.
    pub fn first_day_index(&self) -> i64 {
        (self.start_date - self.epoch_date).num_days()
    }

    pub fn date_at(&self, i: usize) -> NaiveDate {
        self.start_date + Duration::days(i as i64)
    }

    pub fn end_date(&self) -> Option<NaiveDate> {
        (!self.is_empty()).then(|| self.date_at(self.len() - 1))
    }

    pub fn value_on(&self, date: NaiveDate) -> Option<f64> {
        let offset = (date - self.start_date).num_days();
        if offset < 0 {
            return None;
        }
        self.values.get(offset as usize).copied().flatten()
    }

    /// All values, failing on the first missing day.
    pub fn complete_values(&self) -> Result<Vec<f64>> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::IncompleteSeries(self.date_at(i))))
            .collect()
    }

    /// The sub-series of days strictly before `date`.
    pub fn before(&self, date: NaiveDate) -> DailySeries {
        let keep = (date - self.start_date).num_days().clamp(0, self.len() as i64) as usize;
        DailySeries {
            values: self.values[..keep].to_vec(),
            ..self.clone()
        }
    }

    pub(crate) fn expect(&self, t: Transform) -> Result<()> {
        if self.transform != t {
            return Err(Error::TransformMismatch {
                expected: t.as_str(),
                found: self.transform.as_str(),
            });
        }
        Ok(())
    }
}

pub fn resultant_speed(u: f64, v: f64) -> f64 {
    u.hypot(v)
}

pub fn knots_to_mps(knots: f64) -> Result<f64> {
    if knots < 0.0 || !knots.is_finite() {
        return Err(Error::Negative {
            what: "wind speed (kt)",
            value: knots,
        });
    }
    Ok(knots * KNOT_MPS)
}

/// Log wind profile: speed at height `z2` from speed `ws1` at height `z1`.
pub fn scale_log_wind(ws1: f64, z1: f64, z2: f64, z0: f64) -> Result<f64> {
    if !(z0 > 0.0 && z1 > z0 && z2 > z0) {
        return Err(Error::InvalidHeights { z1, z2, z0 });
    }
    if ws1 < 0.0 {
        return Err(Error::Negative {
            what: "wind speed",
            value: ws1,
        });
    }
    Ok(ws1 * (z2 / z0).ln() / (z1 / z0).ln())
}

fn midnight(date: NaiveDate) -> DateTime<Utc> {
    date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc()
}

/// Splice releases into an hourly series: each release contributes its lead
/// hours 0..=5. Input order does not matter; a missing release leaves its six
/// hours missing. The output spans whole UTC days.
pub fn splice_releases(releases: &[ForecastRelease]) -> Result<HourlySeries> {
    let first = releases.first().ok_or(Error::EmptyInput("forecast releases"))?;
    if releases.iter().any(|r| r.site_id != first.site_id) {
        return Err(Error::MixedSites);
    }
    let mut by_time: BTreeMap<DateTime<Utc>, &ForecastRelease> = BTreeMap::new();
    for r in releases {
        r.validate()?;
        if by_time.insert(r.release_time, r).is_some() {
            return Err(Error::DuplicateRelease(r.release_time.to_rfc3339()));
        }
    }
    let first_time = *by_time.keys().next().expect("non-empty");
    let last_time = *by_time.keys().next_back().expect("non-empty");
    let start = midnight(first_time.date_naive());
    let days = (last_time.date_naive() - start.date_naive()).num_days() as usize + 1;
    let mut values = vec![None; days * 24];
    for (time, release) in &by_time {
        let base = (*time - start).num_hours() as usize;
        for lead in release.leads.iter().filter(|l| l.lead_hour < SPLICE_LEADS) {
            values[base + lead.lead_hour as usize] = Some(resultant_speed(lead.u, lead.v));
        }
    }
    Ok(HourlySeries {
        site_id: first.site_id.clone(),
        site: first.site,
        start,
        values,
    })
}

/// Bucket station reports into hourly means (m/s), spanning whole UTC days.
pub fn station_hourly(reports: &[StationReport]) -> Result<HourlySeries> {
    let first = reports.first().ok_or(Error::EmptyInput("station reports"))?;
    if reports.iter().any(|r| r.site_id != first.site_id) {
        return Err(Error::MixedSites);
    }
    let t_min = reports.iter().map(|r| r.timestamp).min().expect("non-empty");
    let t_max = reports.iter().map(|r| r.timestamp).max().expect("non-empty");
    let start = midnight(t_min.date_naive());
    let days = (t_max.date_naive() - start.date_naive()).num_days() as usize + 1;
    let mut sums = vec![(0.0, 0usize); days * 24];
    for r in reports {
        let hour = (r.timestamp - start).num_hours() as usize;
        let slot = &mut sums[hour];
        slot.0 += knots_to_mps(r.wind_speed_kt)?;
        slot.1 += 1;
    }
    Ok(HourlySeries {
        site_id: first.site_id.clone(),
        site: first.site,
        start,
        values: sums
            .into_iter()
            .map(|(s, n)| (n > 0).then(|| s / n as f64))
            .collect(),
    })
}

/// Daily arithmetic means of the available hours; days with fewer than
/// [`MIN_HOURS_PER_DAY`] hours present are missing.
pub fn daily_average(hourly: &HourlySeries, epoch_date: NaiveDate) -> Result<DailySeries> {
    if hourly.values.is_empty() {
        return Err(Error::EmptyInput("hourly series"));
    }
    if hourly.start.time() != chrono::NaiveTime::MIN {
        return Err(Error::InvalidRelease {
            time: hourly.start.to_rfc3339(),
            reason: "hourly series must start at midnight UTC".into(),
        });
    }
    let values = hourly
        .values
        .chunks(24)
        .map(|day| {
            let present: Vec<f64> = day.iter().flatten().copied().collect();
            (present.len() >= MIN_HOURS_PER_DAY).then(|| present.iter().sum::<f64>() / present.len() as f64)
        })
        .collect();
    Ok(DailySeries {
        site_id: hourly.site_id.clone(),
        site: hourly.site,
        epoch_date,
        start_date: hourly.start_date(),
        values,
        transform: Transform::Raw,
    })
}

/// Apply the log wind profile to every value of a raw series.
pub fn scale_series_height(s: &DailySeries, z1: f64, z2: f64, z0: f64) -> Result<DailySeries> {
    s.expect(Transform::Raw)?;
    let values = s
        .values
        .iter()
        .map(|v| v.map(|x| scale_log_wind(x, z1, z2, z0)).transpose())
        .collect::<Result<_>>()?;
    Ok(DailySeries { values, ..s.clone() })
}

pub fn log_transform(s: &DailySeries) -> Result<DailySeries> {
    s.expect(Transform::Raw)?;
    let values = s
        .values
        .iter()
        .enumerate()
        .map(|(index, v)| match *v {
            Some(value) if value > 0.0 => Ok(Some(value.ln())),
            Some(value) => Err(Error::NonPositiveValue { index, value }),
            None => Ok(None),
        })
        .collect::<Result<_>>()?;
    Ok(DailySeries {
        values,
        transform: Transform::Log,
        ..s.clone()
    })
}

pub fn inverse_transform(s: &DailySeries) -> Result<DailySeries> {
    s.expect(Transform::Log)?;
    Ok(DailySeries {
        values: s.values.iter().map(|v| v.map(f64::exp)).collect(),
        transform: Transform::Raw,
        ..s.clone()
    })
}

/// Linearly interpolate interior gaps of at most `max_gap_days` days.
///
/// Leading and trailing missing days are trimmed. Any longer interior gap is
/// an error listing every offending date range.
pub fn fill_gaps(s: &DailySeries, max_gap_days: usize) -> Result<DailySeries> {
    let first = s.values.iter().position(Option::is_some);
    let last = s.values.iter().rposition(Option::is_some);
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyInput("series has no values")),
    };
    let mut values: Vec<Option<f64>> = s.values[first..=last].to_vec();
    let start_date = s.date_at(first);

    let mut long_gaps = Vec::new();
    let mut i = 0;
    while i < values.len() {
        if values[i].is_some() {
            i += 1;
            continue;
        }
        let gap_start = i;
        while values[i].is_none() {
            i += 1;
        }
        let len = i - gap_start;
        if len > max_gap_days {
            long_gaps.push((
                start_date + Duration::days(gap_start as i64),
                start_date + Duration::days(i as i64 - 1),
            ));
            continue;
        }
        let lo = values[gap_start - 1].expect("left neighbour present");
        let hi = values[i].expect("right neighbour present");
        for (k, slot) in values[gap_start..i].iter_mut().enumerate() {
            let w = (k + 1) as f64 / (len + 1) as f64;
            *slot = Some(lo + w * (hi - lo));
        }
    }
    if !long_gaps.is_empty() {
        return Err(Error::GapTooLong {
            max_gap_days,
            gaps: long_gaps,
        });
    }
    Ok(DailySeries {
        start_date,
        values,
        ..s.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn site() -> GeoPoint {
        GeoPoint::new(35.0, -118.0).unwrap()
    }

    fn at(date: &str, hour: u32) -> DateTime<Utc> {
        NaiveDate::parse_from_str(date, "%Y-%m-%d")
            .unwrap()
            .and_hms_opt(hour, 0, 0)
            .unwrap()
            .and_utc()
    }

    fn release(time: DateTime<Utc>, u: f64, v: f64) -> ForecastRelease {
        ForecastRelease {
            site_id: "P1".into(),
            site: site(),
            release_time: time,
            leads: (0..12).map(|h| LeadValue { lead_hour: h, u, v }).collect(),
        }
    }

    fn epoch() -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 2, 1).unwrap()
    }

    fn daily(values: Vec<Option<f64>>) -> DailySeries {
        DailySeries {
            site_id: "P1".into(),
            site: site(),
            epoch_date: epoch(),
            start_date: epoch(),
            values,
            transform: Transform::Raw,
        }
    }

    #[test]
    fn resultant_examples() {
        assert_eq!(resultant_speed(0.0, 0.0), 0.0);
        assert_eq!(resultant_speed(3.0, 4.0), 5.0);
        assert_abs_diff_eq!(resultant_speed(-1.2, 0.5), 1.3, epsilon = 1e-12);
    }

    #[test]
    fn splice_full_day() {
        let rels: Vec<_> = [0, 6, 12, 18].iter().map(|&h| release(at("2015-02-01", h), 3.0, 4.0)).collect();
        let hourly = splice_releases(&rels).unwrap();
        assert_eq!(hourly.values.len(), 24);
        assert!(hourly.values.iter().all(|v| *v == Some(5.0)));
    }

    #[test]
    fn splice_takes_first_six_leads() {
        let mut r = release(at("2015-02-01", 0), 0.0, 0.0);
        for l in r.leads.iter_mut() {
            l.u = l.lead_hour as f64;
        }
        let hourly = splice_releases(&[r]).unwrap();
        assert_eq!(hourly.values[..6], [0.0, 1.0, 2.0, 3.0, 4.0, 5.0].map(Some));
        assert!(hourly.values[6..].iter().all(Option::is_none));
    }

    #[test]
    fn splice_missing_release() {
        let rels: Vec<_> = [6, 12, 18].iter().map(|&h| release(at("2015-02-01", h), 3.0, 4.0)).collect();
        let hourly = splice_releases(&rels).unwrap();
        assert_eq!(hourly.values.len(), 24);
        assert!(hourly.values[..6].iter().all(Option::is_none));
        assert!(hourly.values[6..].iter().all(Option::is_some));
    }

    #[test]
    fn splice_rejects_duplicates_and_bad_releases() {
        let r = release(at("2015-02-01", 6), 1.0, 1.0);
        let err = splice_releases(&[r.clone(), r.clone()]).unwrap_err();
        assert!(err.to_string().contains("2015-02-01T06:00:00"), "{err}");

        let mut odd = r.clone();
        odd.release_time = at("2015-02-01", 7);
        assert!(splice_releases(&[odd]).is_err());

        let mut short = r.clone();
        short.leads.truncate(5);
        assert!(splice_releases(&[short]).is_err());

        let mut other = r.clone();
        other.site_id = "P2".into();
        other.release_time = at("2015-02-01", 12);
        assert!(matches!(splice_releases(&[r, other]), Err(Error::MixedSites)));
        assert!(splice_releases(&[]).is_err());
    }

    #[test]
    fn daily_average_examples() {
        let mk = |values: Vec<Option<f64>>| HourlySeries {
            site_id: "P1".into(),
            site: site(),
            start: at("2015-02-01", 0),
            values,
        };
        let d = daily_average(&mk(vec![Some(5.0); 24]), epoch()).unwrap();
        assert_eq!(d.values, vec![Some(5.0)]);

        let alt = (0..24).map(|h| Some(if h % 2 == 0 { 4.0 } else { 6.0 })).collect();
        assert_eq!(daily_average(&mk(alt), epoch()).unwrap().values, vec![Some(5.0)]);

        // 20 present hours averaging 3.7, 4 missing: enough coverage.
        let mut partial: Vec<Option<f64>> = (0..20).map(|h| Some(if h % 2 == 0 { 3.2 } else { 4.2 })).collect();
        partial.extend([None; 4]);
        let h = mk(partial);
        assert_eq!(h.hours_present_per_day(), vec![20]);
        assert_abs_diff_eq!(daily_average(&h, epoch()).unwrap().values[0].unwrap(), 3.7, epsilon = 1e-12);

        let mut sparse = vec![Some(5.0); 17];
        sparse.extend([None; 7]);
        assert_eq!(daily_average(&mk(sparse), epoch()).unwrap().values, vec![None]);

        assert!(daily_average(&mk(vec![]), epoch()).is_err());
    }

    #[test]
    fn knots_examples() {
        assert_eq!(knots_to_mps(0.0).unwrap(), 0.0);
        assert_eq!(knots_to_mps(1.0).unwrap(), 0.514444);
        assert_abs_diff_eq!(knots_to_mps(10.0).unwrap(), 5.14444, epsilon = 1e-12);
        assert!(knots_to_mps(-1.0).is_err());
    }

    #[test]
    fn log_wind_examples() {
        assert_eq!(scale_log_wind(4.2, 10.0, 10.0, DEFAULT_Z0_M).unwrap(), 4.2);
        let scaled = scale_log_wind(5.0, 10.0, 100.0, DEFAULT_Z0_M).unwrap();
        assert_abs_diff_eq!(scaled / 5.0, 1.27626, epsilon = 2e-5);
        assert_abs_diff_eq!(scaled, 6.3814, epsilon = 5e-4);
        assert_eq!(scale_log_wind(0.0, 10.0, 100.0, DEFAULT_Z0_M).unwrap(), 0.0);
        assert!(scale_log_wind(5.0, 0.001, 100.0, DEFAULT_Z0_M).is_err());
        assert!(scale_log_wind(5.0, 10.0, 0.002, DEFAULT_Z0_M).is_err());
    }

    #[test]
    fn log_transform_examples() {
        let s = daily(vec![Some(1.0), Some(std::f64::consts::E), None]);
        let l = log_transform(&s).unwrap();
        assert_eq!(l.values[0], Some(0.0));
        assert_abs_diff_eq!(l.values[1].unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(l.values[2], None);
        assert!(log_transform(&l).is_err());

        match log_transform(&daily(vec![Some(2.0), Some(0.0)])) {
            Err(Error::NonPositiveValue { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fill_gap_examples() {
        let full = daily(vec![Some(1.0), Some(2.0)]);
        assert_eq!(fill_gaps(&full, 3).unwrap(), full);

        let gap = daily(vec![Some(4.0), None, None, Some(7.0)]);
        let filled = fill_gaps(&gap, 3).unwrap();
        assert_eq!(filled.values.len(), 4);
        assert_abs_diff_eq!(filled.values[1].unwrap(), 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(filled.values[2].unwrap(), 6.0, epsilon = 1e-12);

        let mut long = vec![Some(1.0)];
        long.extend([None; 5]);
        long.push(Some(2.0));
        match fill_gaps(&daily(long), 3) {
            Err(Error::GapTooLong { gaps, .. }) => {
                assert_eq!(gaps, vec![(epoch() + Duration::days(1), epoch() + Duration::days(5))]);
            }
            other => panic!("{other:?}"),
        }

        let edges = daily(vec![None, Some(1.0), Some(2.0), None]);
        let trimmed = fill_gaps(&edges, 3).unwrap();
        assert_eq!(trimmed.start_date, epoch() + Duration::days(1));
        assert_eq!(trimmed.values, vec![Some(1.0), Some(2.0)]);
        assert_eq!(trimmed.first_day_index(), 1);
    }

    #[test]
    fn splice_then_average_is_order_independent() {
        let mut rels = Vec::new();
        for day in 0..3 {
            for (k, h) in [0, 6, 12, 18].iter().enumerate() {
                let d = epoch() + Duration::days(day);
                let t = midnight(d) + Duration::hours(*h);
                rels.push(release(t, 1.0 + day as f64, k as f64));
            }
        }
        let a = daily_average(&splice_releases(&rels).unwrap(), epoch()).unwrap();
        rels.reverse();
        rels.swap(1, 7);
        let b = daily_average(&splice_releases(&rels).unwrap(), epoch()).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn log_round_trip(vals in prop::collection::vec(1e-3f64..50.0, 1..50)) {
            let s = daily(vals.iter().copied().map(Some).collect());
            let back = inverse_transform(&log_transform(&s).unwrap()).unwrap();
            for (a, b) in s.values.iter().zip(&back.values) {
                prop_assert!((a.unwrap() - b.unwrap()).abs() <= 1e-12 * a.unwrap().max(1.0));
            }
        }

        #[test]
        fn log_wind_is_linear(ws in 0.0f64..40.0, c in 0.0f64..10.0, z2 in 1.0f64..200.0) {
            let f = |w| scale_log_wind(w, 10.0, z2, DEFAULT_Z0_M).unwrap();
            let lhs = f(c * ws);
            let rhs = c * f(ws);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }
}
