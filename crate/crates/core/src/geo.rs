//! Coordinates, great-circle distance and raster grids.
//!
//! All distances are kilometres on a sphere of radius [`EARTH_RADIUS_KM`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat_deg: f64,
    lon_deg: f64,
}

impl GeoPoint {
    /// Latitude must lie in [-90, 90] and longitude in [-180, 180).
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self> {
        let ok = lat_deg.is_finite()
            && lon_deg.is_finite()
            && (-90.0..=90.0).contains(&lat_deg)
            && (-180.0..180.0).contains(&lon_deg);
        if !ok {
            return Err(Error::InvalidCoordinate {
                lat: lat_deg,
                lon: lon_deg,
            });
        }
        Ok(Self { lat_deg, lon_deg })
    }

    pub fn lat(&self) -> f64 {
        self.lat_deg
    }

    pub fn lon(&self) -> f64 {
        self.lon_deg
    }
}

/// Great-circle distance via the haversine formula.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    if a == b {
        return 0.0;
    }
    let phi1 = a.lat_deg.to_radians();
    let phi2 = b.lat_deg.to_radians();
    let dphi = phi2 - phi1;
    let dlambda = (b.lon_deg - a.lon_deg).to_radians();
    let s = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    // Symmetric in (a, b): every term is even in the differences.
    2.0 * EARTH_RADIUS_KM * s.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterSpec {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    pub step_deg: f64,
}

// Tolerance for floor(span/step) so that e.g. 5/0.01 counts 500 steps, not 499.
const STEP_EPS: f64 = 1e-9;

impl RasterSpec {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64, step_deg: f64) -> Result<Self> {
        let spec = Self {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
            step_deg,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.lat_min, self.lat_max, self.lon_min, self.lon_max, self.step_deg]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidRaster("non-finite bound".into()));
        }
        if !(self.step_deg > 0.0) {
            return Err(Error::InvalidRaster(format!("step must be positive, got {}", self.step_deg)));
        }
        if self.lat_min >= self.lat_max {
            return Err(Error::DegenerateRaster("latitude"));
        }
        if self.lon_min >= self.lon_max {
            return Err(Error::DegenerateRaster("longitude"));
        }
        GeoPoint::new(self.lat_min, self.lon_min)?;
        GeoPoint::new(self.lat_max, self.lon_min)?;
        if self.lon_max >= 180.0 {
            return Err(Error::InvalidCoordinate {
                lat: self.lat_max,
                lon: self.lon_max,
            });
        }
        Ok(())
    }

    pub fn n_lat(&self) -> usize {
        axis_count(self.lat_max - self.lat_min, self.step_deg)
    }

    pub fn n_lon(&self) -> usize {
        axis_count(self.lon_max - self.lon_min, self.step_deg)
    }

    pub fn len(&self) -> usize {
        self.n_lat() * self.n_lon()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.lat_min..=self.lat_max).contains(&p.lat()) && (self.lon_min..=self.lon_max).contains(&p.lon())
    }
}

fn axis_count(span: f64, step: f64) -> usize {
    (span / step + STEP_EPS).floor() as usize + 1
}

/// Raster points in row-major order: latitude outer, longitude inner,
/// starting at the minimum corner. Coordinates are computed as `min + k * step`
/// so no rounding error accumulates along an axis.
pub fn raster_points(spec: &RasterSpec) -> Result<Vec<GeoPoint>> {
    spec.validate()?;
    let (n_lat, n_lon) = (spec.n_lat(), spec.n_lon());
    let mut out = Vec::with_capacity(n_lat * n_lon);
    for i in 0..n_lat {
        let lat = (spec.lat_min + i as f64 * spec.step_deg).min(spec.lat_max);
        for j in 0..n_lon {
            let lon = (spec.lon_min + j as f64 * spec.step_deg).min(spec.lon_max);
            out.push(GeoPoint::new(lat, lon)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn haversine_examples() {
        assert_eq!(haversine_km(p(0.0, 0.0), p(0.0, 0.0)), 0.0);
        let one_degree = std::f64::consts::PI * EARTH_RADIUS_KM / 180.0;
        assert_abs_diff_eq!(haversine_km(p(0.0, 0.0), p(1.0, 0.0)), one_degree, epsilon = 1e-9);
        assert_abs_diff_eq!(haversine_km(p(0.0, 0.0), p(1.0, 0.0)), 111.195, epsilon = 1e-3);
        assert_abs_diff_eq!(haversine_km(p(35.0, -118.0), p(35.5, -118.0)), 55.597, epsilon = 1e-3);
    }

    #[test]
    fn rejects_bad_coordinates() {
        assert!(GeoPoint::new(91.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, 180.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert!(GeoPoint::new(-90.0, -180.0).is_ok());
    }

    #[test]
    fn raster_examples() {
        let small = RasterSpec::new(0.0, 0.02, 0.0, 0.02, 0.01).unwrap();
        let pts = raster_points(&small).unwrap();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], p(0.0, 0.0));
        assert_eq!(pts[1].lat(), 0.0);
        assert_abs_diff_eq!(pts[1].lon(), 0.01);
        assert!(pts.iter().all(|q| q.lat() <= 0.02 && q.lon() <= 0.02));

        match RasterSpec::new(0.0, 0.0, 0.0, 1.0, 0.5) {
            Err(Error::DegenerateRaster(axis)) => assert_eq!(axis, "latitude"),
            other => panic!("expected degenerate latitude, got {other:?}"),
        }

        let socal = RasterSpec::new(32.0, 37.0, -121.0, -114.0, 0.01).unwrap();
        assert_eq!(socal.n_lat(), 501);
        assert_eq!(socal.n_lon(), 701);
        assert_eq!(raster_points(&socal).unwrap().len(), 351_201);
    }

    fn arb_point() -> impl Strategy<Value = GeoPoint> {
        (-89.0f64..89.0, -179.0f64..179.0).prop_map(|(a, b)| p(a, b))
    }

    proptest! {
        #[test]
        fn haversine_symmetric(a in arb_point(), b in arb_point()) {
            prop_assert_eq!(haversine_km(a, b), haversine_km(b, a));
            prop_assert!(haversine_km(a, b) >= 0.0);
        }

        #[test]
        fn haversine_triangle(a in arb_point(), b in arb_point(), c in arb_point()) {
            prop_assert!(haversine_km(a, c) <= haversine_km(a, b) + haversine_km(b, c) + 1e-9);
        }

        #[test]
        fn raster_count_formula(lat0 in 30.0f64..35.0, dlat in 0.05f64..2.0, lon0 in -120.0f64..-115.0,
                                dlon in 0.05f64..2.0, step in 0.01f64..0.3) {
            let spec = RasterSpec::new(lat0, lat0 + dlat, lon0, lon0 + dlon, step).unwrap();
            let expected = ((dlat / step + 1e-9).floor() as usize + 1) * ((dlon / step + 1e-9).floor() as usize + 1);
            prop_assert_eq!(raster_points(&spec).unwrap().len(), expected);
        }
    }
}
