//! CSV readers and writers for forecast releases, station reports and daily series.
//!
//! Forecast input: `site_id,lat,lon,release_time_utc,lead_hour,u_mps,v_mps`
//! Station input:  `site_id,lat,lon,timestamp_utc,wind_speed_kt`
//! Series output:  `site_id,date,value,transform`

use std::collections::HashMap;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};

use super::{DailySeries, ForecastRelease, LeadValue, StationReport};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;

pub const FORECAST_HEADER: [&str; 7] = ["site_id", "lat", "lon", "release_time_utc", "lead_hour", "u_mps", "v_mps"];
pub const STATION_HEADER: [&str; 5] = ["site_id", "lat", "lon", "timestamp_utc", "wind_speed_kt"];
pub const SERIES_HEADER: [&str; 4] = ["site_id", "date", "value", "transform"];

/// Parse an ISO-8601 UTC timestamp. Accepts RFC 3339 with offset, or a naive
/// `YYYY-MM-DDTHH:MM[:SS]` / `YYYY-MM-DD HH:MM[:SS]` taken as UTC.
pub fn parse_utc(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .map(|t| t.and_utc())
}

struct Row<'a> {
    line: u64,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn field(&self, i: usize, name: &str) -> Result<&str> {
        self.record
            .get(i)
            .map(str::trim)
            .ok_or_else(|| self.err(format!("missing field `{name}`")))
    }

    fn parse<T: FromStr>(&self, i: usize, name: &str) -> Result<T> {
        let raw = self.field(i, name)?;
        raw.parse()
            .map_err(|_| self.err(format!("invalid {name} `{raw}`")))
    }

    fn finite(&self, i: usize, name: &str) -> Result<f64> {
        let v: f64 = self.parse(i, name)?;
        if !v.is_finite() {
            return Err(self.err(format!("non-finite {name}")));
        }
        Ok(v)
    }

    fn time(&self, i: usize, name: &str) -> Result<DateTime<Utc>> {
        let raw = self.field(i, name)?;
        parse_utc(raw).ok_or_else(|| self.err(format!("invalid timestamp `{raw}`")))
    }

    fn point(&self) -> Result<GeoPoint> {
        let (lat, lon) = (self.finite(1, "lat")?, self.finite(2, "lon")?);
        GeoPoint::new(lat, lon).map_err(|e| self.err(e.to_string()))
    }
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers()?;
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        });
    }
    Ok(())
}

fn reader(input: impl Read) -> csv::Reader<impl Read> {
    csv::ReaderBuilder::new().flexible(true).from_reader(input)
}

/// Groups sites in order of first appearance, checking coordinates agree.
struct SiteGroups<T> {
    index: HashMap<String, usize>,
    groups: Vec<(String, GeoPoint, Vec<T>)>,
}

impl<T> SiteGroups<T> {
    fn new() -> Self {
        Self {
            index: HashMap::new(),
            groups: Vec::new(),
        }
    }

    fn slot(&mut self, row: &Row<'_>, id: &str, site: GeoPoint) -> Result<&mut Vec<T>> {
        let k = match self.index.get(id) {
            Some(&k) => {
                if self.groups[k].1 != site {
                    return Err(row.err(format!("site `{id}` has inconsistent coordinates")));
                }
                k
            }
            None => {
                self.index.insert(id.to_string(), self.groups.len());
                self.groups.push((id.to_string(), site, Vec::new()));
                self.groups.len() - 1
            }
        };
        Ok(&mut self.groups[k].2)
    }
}

/// Read forecast rows, grouped into releases per site (sites in order of
/// first appearance; releases in order of first appearance within a site).
pub fn read_forecast_csv(input: impl Read) -> Result<Vec<(String, Vec<ForecastRelease>)>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &FORECAST_HEADER)?;
    let mut sites: SiteGroups<ForecastRelease> = SiteGroups::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let row = Row {
            line: record.position().map_or(0, |p| p.line()),
            record: &record,
        };
        if record.len() != FORECAST_HEADER.len() {
            return Err(row.err(format!("expected {} fields, found {}", FORECAST_HEADER.len(), record.len())));
        }
        let id = row.field(0, "site_id")?.to_string();
        let site = row.point()?;
        let release_time = row.time(3, "release_time_utc")?;
        let lead = LeadValue {
            lead_hour: row.parse(4, "lead_hour")?,
            u: row.finite(5, "u_mps")?,
            v: row.finite(6, "v_mps")?,
        };
        let releases = sites.slot(&row, &id, site)?;
        match releases.iter_mut().find(|r| r.release_time == release_time) {
            Some(r) => r.leads.push(lead),
            None => releases.push(ForecastRelease {
                site_id: id,
                site,
                release_time,
                leads: vec![lead],
            }),
        }
    }
    Ok(sites
        .groups
        .into_iter()
        .map(|(id, _, mut releases)| {
            for r in &mut releases {
                r.leads.sort_by_key(|l| l.lead_hour);
            }
            (id, releases)
        })
        .collect())
}

/// Station reports grouped per site, sites in order of first appearance.
pub fn read_station_csv(input: impl Read) -> Result<Vec<(String, Vec<StationReport>)>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &STATION_HEADER)?;
    let mut sites: SiteGroups<StationReport> = SiteGroups::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let row = Row {
            line: record.position().map_or(0, |p| p.line()),
            record: &record,
        };
        if record.len() != STATION_HEADER.len() {
            return Err(row.err(format!("expected {} fields, found {}", STATION_HEADER.len(), record.len())));
        }
        let id = row.field(0, "site_id")?.to_string();
        let site = row.point()?;
        let timestamp = row.time(3, "timestamp_utc")?;
        let wind_speed_kt = row.finite(4, "wind_speed_kt")?;
        if wind_speed_kt < 0.0 {
            return Err(row.err("negative wind_speed_kt"));
        }
        sites.slot(&row, &id, site)?.push(StationReport {
            site_id: id,
            site,
            timestamp,
            wind_speed_kt,
        });
    }
    Ok(sites.groups.into_iter().map(|(id, _, r)| (id, r)).collect())
}

/// Write daily series; missing days have an empty `value`.
pub fn write_series_csv(out: impl Write, series: &[DailySeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_HEADER)?;
    for s in series {
        for (i, v) in s.values.iter().enumerate() {
            w.write_record([
                s.site_id.clone(),
                s.date_at(i).to_string(),
                v.map(|x| x.to_string()).unwrap_or_default(),
                s.transform.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_forecast_rows() {
        let mut text = String::from("site_id,lat,lon,release_time_utc,lead_hour,u_mps,v_mps\n");
        for h in (0..6).rev() {
            text.push_str(&format!("G1,34.5,-117.0,2015-02-01T06:00:00Z,{h},3,4\n"));
        }
        text.push_str("G2,33.0,-116.5,2015-02-01 00:00:00,0,1,0\n");
        let sites = read_forecast_csv(text.as_bytes()).unwrap();
        assert_eq!(sites.len(), 2);
        assert_eq!(sites[0].0, "G1");
        let r = &sites[0].1[0];
        assert_eq!(r.leads.len(), 6);
        assert!(r.leads.windows(2).all(|w| w[0].lead_hour < w[1].lead_hour));
        r.validate().unwrap();
    }

    #[test]
    fn reports_line_of_corrupt_row() {
        let text = "site_id,lat,lon,release_time_utc,lead_hour,u_mps,v_mps\n\
                    G1,34.5,-117.0,2015-02-01T06:00:00Z,0,3,4\n\
                    G1,34.5,-117.0,2015-02-01T06:00:00Z,1,abc,4\n";
        match read_forecast_csv(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("u_mps"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_header_and_bad_coordinates() {
        assert!(matches!(
            read_station_csv("a,b\n1,2\n".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let text = "site_id,lat,lon,timestamp_utc,wind_speed_kt\nK1,95,0,2015-02-01T00:00Z,3\n";
        assert!(matches!(read_station_csv(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn reads_station_rows() {
        let text = "site_id,lat,lon,timestamp_utc,wind_speed_kt\n\
                    KPSP,33.83,-116.51,2015-02-01T00:53:00Z,7\n\
                    KPSP,33.83,-116.51,2015-02-01T01:53:00Z,9\n";
        let sites = read_station_csv(text.as_bytes()).unwrap();
        assert_eq!(sites[0].1.len(), 2);
        assert_eq!(sites[0].1[1].wind_speed_kt, 9.0);
    }
}
