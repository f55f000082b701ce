use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use chrono::Duration;
use log::{info, warn};
use rayon::prelude::*;
use windkrig::forecast::{
    benchmark_report, forecastable_dates, predict_site, write_forecast_csv, write_mape_csv, write_report_csv, BenchSite,
};
use windkrig::geo::GeoPoint;
use windkrig::ingest::{
    daily_average, fill_gaps, log_transform, read_forecast_csv, read_station_csv, scale_series_height, splice_releases,
    station_hourly, write_series_csv, DailySeries, StationReport,
};
use windkrig::kriging::{read_theta_csv, write_surfaces_csv, write_theta_csv, DiagonalConvention, ParamKriger, SiteFit};
use windkrig::temporal::{fit_temporal_model, PARAM_NAMES};
use windkrig::variogram::{
    check_cnsd, default_max_lag_km, empirical_semivariogram, fit_model, read_models_csv, write_empirical_csv,
    write_models_csv, VariogramModel,
};

use crate::config::RunConfig;

pub const THETA_FILE: &str = "theta.csv";
pub const SERIES_FILE: &str = "series.csv";
pub const EMPIRICAL_FILE: &str = "variogram_empirical.csv";
pub const MODELS_FILE: &str = "variogram_models.csv";
pub const FORECAST_FILE: &str = "forecasts.csv";
pub const REPORT_FILE: &str = "benchmark.csv";
pub const BENCH_FORECAST_FILE: &str = "benchmark_forecasts.csv";
pub const MAPE_FILE: &str = "mape_vs_persistence.csv";
const CNSD_TRIALS: usize = 1000;

pub fn surface_file(param: &str) -> String {
    format!("surface_{param}.csv")
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn write_output(c: &RunConfig, name: &str, bytes: Vec<u8>) -> Result<()> {
    fs::create_dir_all(&c.output_dir).with_context(|| format!("creating {}", c.output_dir.display()))?;
    let path = c.output_dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn read_theta(c: &RunConfig) -> Result<Vec<SiteFit>> {
    let path = c.output_dir.join(THETA_FILE);
    let rows = read_theta_csv(open(&path)?, c.epoch()?).with_context(|| format!("reading {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} has no sites", path.display());
    }
    Ok(rows)
}

fn read_models(c: &RunConfig) -> Result<Vec<VariogramModel>> {
    let path = c.output_dir.join(MODELS_FILE);
    let records = read_models_csv(open(&path)?).with_context(|| format!("reading {}", path.display()))?;
    PARAM_NAMES
        .iter()
        .map(|name| {
            records
                .iter()
                .find(|(p, _, _)| p == name)
                .map(|(_, m, _)| m.clone())
                .ok_or_else(|| anyhow!("{} has no model for `{name}`", path.display()))
        })
        .collect()
}

fn build_kriger(c: &RunConfig) -> Result<(Vec<SiteFit>, ParamKriger)> {
    let theta = read_theta(c)?;
    let models = read_models(c)?;
    let sites: Vec<GeoPoint> = theta.iter().map(|r| r.site).collect();
    let table: Vec<_> = theta.iter().map(|r| r.params.clone()).collect();
    let kriger = ParamKriger::new(&models, &sites, &table, DiagonalConvention::Nugget)?;
    Ok((theta, kriger))
}

/// Fit the temporal model to every gridded forecast series.
pub fn cmd_fit(c: &RunConfig) -> Result<()> {
    let epoch = c.epoch()?;
    let path = c.forecast_path()?;
    let groups = read_forecast_csv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if groups.is_empty() {
        bail!("{} contains no forecast rows", path.display());
    }
    let fitted: Vec<(SiteFit, DailySeries)> = groups
        .par_iter()
        .map(|(site_id, releases)| {
            let run = || -> windkrig::Result<(SiteFit, DailySeries)> {
                let hourly = splice_releases(releases)?;
                let daily = fill_gaps(&daily_average(&hourly, epoch)?, c.max_gap_days)?;
                let log = log_transform(&daily)?;
                let report = fit_temporal_model(&log)?;
                let fit = SiteFit {
                    site_id: site_id.clone(),
                    site: log.site,
                    params: report.params,
                    ks_statistic: report.ks_statistic,
                    ks_reject: report.ks_reject_5pct,
                    aic: report.aic,
                };
                if !report.stationary {
                    warn!("site {site_id}: fitted AR(2) is not stationary");
                }
                Ok((fit, log))
            };
            run().map_err(|e| anyhow::Error::new(e).context(format!("site {site_id}")))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let rejected = fitted.iter().filter(|(f, _)| f.ks_reject).count();
    if rejected > 0 {
        warn!("KS normality rejected at 5% for {rejected} of {} sites", fitted.len());
    }
    let (rows, series): (Vec<SiteFit>, Vec<DailySeries>) = fitted.into_iter().unzip();
    let mut theta = Vec::new();
    write_theta_csv(&mut theta, &rows)?;
    let mut series_csv = Vec::new();
    write_series_csv(&mut series_csv, &series)?;
    write_output(c, THETA_FILE, theta)?;
    write_output(c, SERIES_FILE, series_csv)
}

/// Empirical and fitted semivariograms of each parameter across sites.
pub fn cmd_variogram(c: &RunConfig) -> Result<()> {
    let theta = read_theta(c)?;
    let sites: Vec<GeoPoint> = theta.iter().map(|r| r.site).collect();
    let max_lag = c.max_lag_km.unwrap_or_else(|| default_max_lag_km(&sites));
    let rows: Vec<[f64; 18]> = theta.iter().map(|r| r.params.to_array()).collect();
    let fits = PARAM_NAMES
        .par_iter()
        .enumerate()
        .map(|(k, name)| {
            let y: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let run = || -> windkrig::Result<_> {
                let ev = match empirical_semivariogram(&sites, &y, c.bin_width_km, max_lag) {
                    Err(windkrig::Error::NoPairs(_)) => return Err(windkrig::Error::TooFewBins(0)),
                    other => other?,
                };
                let fit = fit_model(&ev, &c.families, c.seed)?;
                Ok((ev, fit))
            };
            run().map_err(|e| anyhow::Error::new(e).context(format!("parameter {name}")))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut empirical = Vec::new();
    let mut models = Vec::new();
    for (name, (ev, fit)) in PARAM_NAMES.iter().zip(fits) {
        let report = check_cnsd(&fit.model, &sites, CNSD_TRIALS, c.seed);
        if !report.passed {
            warn!("{name}: fitted model fails the CNSD check (worst {:.3e})", report.worst_violation);
        }
        info!("{name}: {} (objective {:.4e})", fit.family, fit.objective);
        empirical.push((name.to_string(), ev));
        models.push((name.to_string(), fit));
    }
    let mut ev_csv = Vec::new();
    write_empirical_csv(&mut ev_csv, &empirical)?;
    let mut model_csv = Vec::new();
    write_models_csv(&mut model_csv, &models)?;
    write_output(c, EMPIRICAL_FILE, ev_csv)?;
    write_output(c, MODELS_FILE, model_csv)
}

/// One kriged surface file per parameter.
pub fn cmd_krige(c: &RunConfig) -> Result<()> {
    let (theta, kriger) = build_kriger(c)?;
    let coords: Vec<(f64, f64)> = theta.iter().map(|r| (r.site.lat(), r.site.lon())).collect();
    let spec = c.raster_spec(&coords)?;
    info!("kriging {} parameters on {} raster cells", PARAM_NAMES.len(), spec.len());
    let surfaces = kriger.surfaces(&spec)?;
    let mut outputs = Vec::new();
    for s in &surfaces {
        let mut buf = Vec::new();
        write_surfaces_csv(&mut buf, std::slice::from_ref(s))?;
        outputs.push((surface_file(&s.param_name), buf));
    }
    for (name, buf) in outputs {
        write_output(c, &name, buf)?;
    }
    Ok(())
}

/// Observed station history as a height-scaled log series. Days with a
/// non-positive mean speed are treated as missing.
fn station_series(c: &RunConfig, reports: &[StationReport]) -> Result<DailySeries> {
    let hourly = station_hourly(reports)?;
    let raw = daily_average(&hourly, c.epoch()?)?;
    let mut scaled = scale_series_height(&raw, c.station_height_m, c.forecast_height_m, c.z0)?;
    let calm = scaled.values.iter().filter(|v| matches!(v, Some(x) if *x <= 0.0)).count();
    if calm > 0 {
        warn!("station {}: {calm} calm days treated as missing", scaled.site_id);
        for v in scaled.values.iter_mut() {
            if matches!(v, Some(x) if *x <= 0.0) {
                *v = None;
            }
        }
    }
    Ok(log_transform(&scaled)?)
}

struct StationRun {
    site: BenchSite,
}

fn prepare_stations(c: &RunConfig) -> Result<Vec<StationRun>> {
    let (theta, kriger) = build_kriger(c)?;
    let coords: Vec<(f64, f64)> = theta.iter().map(|r| (r.site.lat(), r.site.lon())).collect();
    let spec = c.raster_spec(&coords)?;
    let path = c.station_path()?;
    let groups = read_station_csv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if groups.is_empty() {
        bail!("{} contains no station rows", path.display());
    }
    groups
        .iter()
        .map(|(site_id, reports)| {
            let history = station_series(c, reports).with_context(|| format!("station {site_id}"))?;
            if !spec.contains(history.site) {
                warn!(
                    "station {site_id} ({}, {}) lies outside the raster; kriging anyway",
                    history.site.lat(),
                    history.site.lon()
                );
            }
            let params = kriger.at(history.site).with_context(|| format!("kriging at station {site_id}"))?;
            if !params.is_stationary() {
                warn!("station {site_id}: kriged AR(2) coefficients are not stationary");
            }
            Ok(StationRun {
                site: BenchSite {
                    site_id: site_id.clone(),
                    params,
                    history,
                },
            })
        })
        .collect()
}

/// Rolling day-ahead forecasts at every station, plus the day after its
/// last observation.
pub fn cmd_predict(c: &RunConfig) -> Result<()> {
    let stations = prepare_stations(c)?;
    let mut records = Vec::new();
    for s in &stations {
        let h = &s.site.history;
        let mut dates = forecastable_dates(h);
        if let Some(end) = h.end_date() {
            let next = end + Duration::days(1);
            if h.value_on(end).is_some() && h.value_on(end - Duration::days(1)).is_some() {
                dates.push(next);
            }
        }
        if dates.is_empty() {
            warn!("station {}: no day has two observed predecessors", s.site.site_id);
            continue;
        }
        records.extend(predict_site(&s.site.params, h, &dates).with_context(|| format!("station {}", s.site.site_id))?);
    }
    let mut buf = Vec::new();
    write_forecast_csv(&mut buf, &records)?;
    write_output(c, FORECAST_FILE, buf)
}

/// Error moments, interval coverage and MAPE against persistence per
/// station and period.
pub fn cmd_benchmark(c: &RunConfig) -> Result<()> {
    let split = c.split()?;
    let stations: Vec<BenchSite> = prepare_stations(c)?.into_iter().map(|s| s.site).collect();
    let report = benchmark_report(&stations, split)?;
    for (site, period, why) in report.skipped() {
        warn!("station {site}: {period} benchmark skipped ({why})");
    }
    let mut table = Vec::new();
    write_report_csv(&mut table, &report.rows())?;
    let mut mape = Vec::new();
    write_mape_csv(&mut mape, &report.mape_rows())?;
    let mut forecasts = Vec::new();
    write_forecast_csv(&mut forecasts, report.records())?;
    write_output(c, REPORT_FILE, table)?;
    write_output(c, MAPE_FILE, mape)?;
    write_output(c, BENCH_FORECAST_FILE, forecasts)
}
