//! Spatio-temporal wind-speed model.
//!
//! Daily log wind speed at each grid site is modelled as a seasonal mean plus
//! an AR(2) term with seasonal volatility ([`temporal`]). The 18 fitted
//! parameters are treated as spatial fields: their semivariograms are
//! estimated and modelled ([`variogram`]) and ordinary kriging transfers them
//! to arbitrary locations ([`kriging`]), where day-ahead forecasts with 95%
//! prediction intervals are produced and benchmarked ([`forecast`]).

pub mod error;
pub mod forecast;
pub mod geo;
pub mod ingest;
pub mod kriging;
pub mod temporal;
pub mod variogram;

pub use error::{Error, Result};
pub use geo::{haversine_km, raster_points, GeoPoint, RasterSpec};
pub use temporal::{FitReport, TemporalParams};
