use std::io::Write;

use rayon::prelude::*;

use super::{weighted_sum, DiagonalConvention, KrigingSystem};
use crate::error::{Error, Result};
use crate::geo::{haversine_km, raster_points, GeoPoint, RasterSpec};
use crate::variogram::VariogramModel;

pub const SURFACE_HEADER: [&str; 5] = ["param", "lat", "lon", "estimate", "sigma2"];

/// Kriged estimates and variances over a raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSurface {
    pub spec: RasterSpec,
    pub param_name: String,
    pub values: Vec<f64>,
    pub sigma2: Vec<f64>,
}

impl KrigingSystem {
    /// Krige `y` at every raster point. Cells are independent and share the
    /// factorization; the output does not depend on the thread count.
    pub fn surface(&self, param_name: &str, y: &[f64], spec: &RasterSpec) -> Result<ParamSurface> {
        let points = raster_points(spec)?;
        let mut surfaces = krige_surfaces(&[(param_name, self, y)], &points, spec)?;
        Ok(surfaces.remove(0))
    }
}

/// Krige several parameters on the same raster, computing each cell's
/// site distances once.
pub(crate) fn krige_surfaces(
    jobs: &[(&str, &KrigingSystem, &[f64])],
    points: &[GeoPoint],
    spec: &RasterSpec,
) -> Result<Vec<ParamSurface>> {
    for (_, sys, y) in jobs {
        if sys.sites().len() != y.len() {
            return Err(Error::LengthMismatch(format!("{} sites, {} values", sys.sites().len(), y.len())));
        }
    }
    let Some((_, first, _)) = jobs.first() else {
        return Ok(Vec::new());
    };
    let sites = first.sites();
    if jobs.iter().any(|(_, s, _)| s.sites() != sites) {
        return Err(Error::LengthMismatch("surfaces must share one site set".into()));
    }
    let cells: Vec<Result<Vec<(f64, f64)>>> = points
        .par_iter()
        .map(|&p0| {
            let d: Vec<f64> = sites.iter().map(|s| haversine_km(*s, p0)).collect();
            jobs.iter()
                .map(|(_, sys, y)| {
                    let sol = sys.solve_at_distances(&d)?;
                    Ok((weighted_sum(&sol.weights, y)?, sol.sigma2))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::CellFailed {
                    lat: p0.lat(),
                    lon: p0.lon(),
                    source: Box::new(e),
                })
        })
        .collect();
    let mut out: Vec<ParamSurface> = jobs
        .iter()
        .map(|(name, _, _)| ParamSurface {
            spec: *spec,
            param_name: name.to_string(),
            values: Vec::with_capacity(points.len()),
            sigma2: Vec::with_capacity(points.len()),
        })
        .collect();
    for cell in cells {
        for (surface, (v, s2)) in out.iter_mut().zip(cell?) {
            surface.values.push(v);
            surface.sigma2.push(s2);
        }
    }
    Ok(out)
}

pub fn krige_parameter_surface(
    m: &VariogramModel,
    sites: &[GeoPoint],
    y: &[f64],
    spec: &RasterSpec,
) -> Result<ParamSurface> {
    KrigingSystem::new(m, sites, DiagonalConvention::Nugget)?.surface("value", y, spec)
}

/// Coordinates are written with six decimals.
pub fn write_surfaces_csv<W: Write>(out: W, surfaces: &[ParamSurface]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SURFACE_HEADER)?;
    for s in surfaces {
        let points = raster_points(&s.spec)?;
        if points.len() != s.values.len() || points.len() != s.sigma2.len() {
            return Err(Error::LengthMismatch(format!("surface `{}` does not match its raster", s.param_name)));
        }
        for ((p, v), s2) in points.iter().zip(&s.values).zip(&s.sigma2) {
            w.write_record([
                s.param_name.clone(),
                format!("{:.6}", p.lat()),
                format!("{:.6}", p.lon()),
                v.to_string(),
                s2.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
