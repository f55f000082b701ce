use std::io::{Read, Write};

use chrono::NaiveDate;

use super::surface::krige_surfaces;
use super::{weighted_sum, DiagonalConvention, KrigingSystem, ParamSurface};
use crate::error::{Error, Result};
use crate::geo::{haversine_km, raster_points, GeoPoint, RasterSpec};
use crate::temporal::{enforce_variance_floor, TemporalParams, N_PARAMS, PARAM_NAMES};
use crate::variogram::VariogramModel;

pub const THETA_HEADER: [&str; 24] = [
    "site_id", "lat", "lon", "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "a9", "a10", "a11", "a12", "alpha1",
    "alpha2", "b0", "b1", "b2", "ks_stat", "ks_reject", "aic",
];

/// One row of the parameter table.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteFit {
    pub site_id: String,
    pub site: GeoPoint,
    pub params: TemporalParams,
    pub ks_statistic: f64,
    pub ks_reject: bool,
    pub aic: f64,
}

pub fn write_theta_csv<W: Write>(out: W, rows: &[SiteFit]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(THETA_HEADER)?;
    for r in rows {
        let mut rec = vec![r.site_id.clone(), r.site.lat().to_string(), r.site.lon().to_string()];
        rec.extend(r.params.to_array().iter().map(|v| v.to_string()));
        rec.extend([r.ks_statistic.to_string(), r.ks_reject.to_string(), r.aic.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// The table does not store the day-index origin, so it is supplied here.
pub fn read_theta_csv<R: Read>(input: R, epoch_date: NaiveDate) -> Result<Vec<SiteFit>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().map(str::trim).ne(THETA_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", THETA_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("column `{}`: {e}", THETA_HEADER[i]),
            })
        };
        let site = GeoPoint::new(num(1)?, num(2)?).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        let mut values = [0.0; N_PARAMS];
        for (k, v) in values.iter_mut().enumerate() {
            *v = num(3 + k)?;
        }
        let ks_reject = match rec[22].trim() {
            "true" | "1" => true,
            "false" | "0" => false,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("column `ks_reject`: expected a boolean, got `{other}`"),
                })
            }
        };
        out.push(SiteFit {
            site_id: rec[0].to_string(),
            site,
            params: TemporalParams::from_array(&values, epoch_date),
            ks_statistic: num(21)?,
            ks_reject,
            aic: num(23)?,
        });
    }
    Ok(out)
}

/// One kriging system per temporal parameter over a shared site set.
pub struct ParamKriger {
    systems: Vec<KrigingSystem>,
    /// Parameter values by parameter, then site.
    columns: Vec<Vec<f64>>,
    epoch_date: NaiveDate,
}

impl ParamKriger {
    pub fn new(
        models: &[VariogramModel],
        sites: &[GeoPoint],
        table: &[TemporalParams],
        convention: DiagonalConvention,
    ) -> Result<Self> {
        if models.len() != N_PARAMS {
            return Err(Error::LengthMismatch(format!("{} variogram models, expected {N_PARAMS}", models.len())));
        }
        if sites.len() != table.len() {
            return Err(Error::LengthMismatch(format!("{} sites, {} parameter rows", sites.len(), table.len())));
        }
        let epoch_date = table.first().ok_or(Error::EmptyInput("parameter table"))?.epoch_date;
        let rows: Vec<[f64; N_PARAMS]> = table.iter().map(TemporalParams::to_array).collect();
        let columns = (0..N_PARAMS).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
        let systems = models
            .iter()
            .map(|m| KrigingSystem::new(m, sites, convention))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            systems,
            columns,
            epoch_date,
        })
    }

    pub fn sites(&self) -> &[GeoPoint] {
        self.systems[0].sites()
    }

    /// Raw kriged parameter vector, before the variance-floor adjustment.
    pub fn krige_raw(&self, s0: GeoPoint) -> Result<[f64; N_PARAMS]> {
        let d: Vec<f64> = self.sites().iter().map(|s| haversine_km(*s, s0)).collect();
        let mut out = [0.0; N_PARAMS];
        for (k, v) in out.iter_mut().enumerate() {
            let sol = self.systems[k].solve_at_distances(&d)?;
            *v = weighted_sum(&sol.weights, &self.columns[k])?;
        }
        Ok(out)
    }

    /// Kriged parameters at `s0`, with `(b1, b2)` shrunk if the kriged
    /// variance curve is not strictly positive.
    pub fn at(&self, s0: GeoPoint) -> Result<TemporalParams> {
        let mut p = TemporalParams::from_array(&self.krige_raw(s0)?, self.epoch_date);
        p.b = enforce_variance_floor(p.b)?;
        Ok(p)
    }

    /// All parameter surfaces in parameter order.
    pub fn surfaces(&self, spec: &RasterSpec) -> Result<Vec<ParamSurface>> {
        let points = raster_points(spec)?;
        let jobs: Vec<(&str, &KrigingSystem, &[f64])> = PARAM_NAMES
            .iter()
            .zip(&self.systems)
            .zip(&self.columns)
            .map(|((n, s), c)| (*n, s, c.as_slice()))
            .collect();
        krige_surfaces(&jobs, &points, spec)
    }
}

pub fn krige_params_at(
    models: &[VariogramModel],
    sites: &[GeoPoint],
    table: &[TemporalParams],
    s0: GeoPoint,
) -> Result<TemporalParams> {
    ParamKriger::new(models, sites, table, DiagonalConvention::Nugget)?.at(s0)
}
