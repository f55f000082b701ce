//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use windkrig::geo::RasterSpec;
use windkrig::ingest::DEFAULT_Z0_M;
use windkrig::variogram::{ModelFamily, StructureKind, DEFAULT_BIN_WIDTH_KM};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_RASTER_STEP_DEG: f64 = 0.01;
pub const DEFAULT_FORECAST_HEIGHT_M: f64 = 100.0;
pub const DEFAULT_STATION_HEIGHT_M: f64 = 10.0;
pub const DEFAULT_MAX_GAP_DAYS: usize = 3;

const KNOWN_KEYS: &[&str] = &[
    "forecast_csv",
    "station_csv",
    "output_dir",
    "epoch_date",
    "split_date",
    "z0",
    "forecast_height_m",
    "station_height_m",
    "raster_lat_min",
    "raster_lat_max",
    "raster_lon_min",
    "raster_lon_max",
    "raster_step_deg",
    "bin_width_km",
    "max_lag_km",
    "max_gap_days",
    "variogram_families",
    "seed",
    "threads",
];

/// Raster bounds; `None` fields fall back to the site bounding box.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RasterBounds {
    pub lat_min: Option<f64>,
    pub lat_max: Option<f64>,
    pub lon_min: Option<f64>,
    pub lon_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub base_dir: PathBuf,
    pub forecast_csv: Option<PathBuf>,
    pub station_csv: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub epoch_date: Option<NaiveDate>,
    pub split_date: Option<NaiveDate>,
    pub z0: f64,
    pub forecast_height_m: f64,
    pub station_height_m: f64,
    pub raster: RasterBounds,
    pub raster_step_deg: f64,
    pub bin_width_km: f64,
    pub max_lag_km: Option<f64>,
    pub max_gap_days: usize,
    pub families: Vec<ModelFamily>,
    pub seed: u64,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            base_dir: PathBuf::from("."),
            forecast_csv: None,
            station_csv: None,
            output_dir: PathBuf::from("out"),
            epoch_date: None,
            split_date: None,
            z0: DEFAULT_Z0_M,
            forecast_height_m: DEFAULT_FORECAST_HEIGHT_M,
            station_height_m: DEFAULT_STATION_HEIGHT_M,
            raster: RasterBounds::default(),
            raster_step_deg: DEFAULT_RASTER_STEP_DEG,
            bin_width_km: DEFAULT_BIN_WIDTH_KM,
            max_lag_km: None,
            max_gap_days: DEFAULT_MAX_GAP_DAYS,
            families: ModelFamily::candidates(&StructureKind::ALL, true),
            seed: DEFAULT_SEED,
            threads: 0,
        }
    }
}

fn parse_families(s: &str) -> Result<Vec<ModelFamily>> {
    s.split(',')
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .map(|f| {
            if f.eq_ignore_ascii_case("nugget") {
                return Ok(ModelFamily::nugget());
            }
            let kinds = f
                .split('+')
                .map(|k| k.parse::<StructureKind>().map_err(|e| anyhow!(e)))
                .collect::<Result<Vec<_>>>()?;
            if kinds.len() > 2 {
                bail!("family `{f}` has more than two structures");
            }
            Ok(ModelFamily::new(kinds))
        })
        .collect()
}

fn parse_date(key: &str, v: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(v, "%Y-%m-%d").with_context(|| format!("`{key}`: expected YYYY-MM-DD, got `{v}`"))
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| anyhow!("`{key}`: {e} (`{v}`)"))
}

impl RunConfig {
    /// Parse config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", i + 1))?;
            let k = k.trim();
            if !KNOWN_KEYS.contains(&k) {
                bail!("config line {}: unknown key `{k}`", i + 1);
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        let mut c = RunConfig {
            base_dir: base_dir.to_path_buf(),
            output_dir: base_dir.join("out"),
            ..RunConfig::default()
        };
        for (k, v) in &entries {
            let k = k.as_str();
            match k {
                "forecast_csv" => c.forecast_csv = Some(base_dir.join(v)),
                "station_csv" => c.station_csv = Some(base_dir.join(v)),
                "output_dir" => c.output_dir = base_dir.join(v),
                "epoch_date" => c.epoch_date = Some(parse_date(k, v)?),
                "split_date" => c.split_date = Some(parse_date(k, v)?),
                "z0" => c.z0 = parse_num(k, v)?,
                "forecast_height_m" => c.forecast_height_m = parse_num(k, v)?,
                "station_height_m" => c.station_height_m = parse_num(k, v)?,
                "raster_lat_min" => c.raster.lat_min = Some(parse_num(k, v)?),
                "raster_lat_max" => c.raster.lat_max = Some(parse_num(k, v)?),
                "raster_lon_min" => c.raster.lon_min = Some(parse_num(k, v)?),
                "raster_lon_max" => c.raster.lon_max = Some(parse_num(k, v)?),
                "raster_step_deg" => c.raster_step_deg = parse_num(k, v)?,
                "bin_width_km" => c.bin_width_km = parse_num(k, v)?,
                "max_lag_km" => c.max_lag_km = Some(parse_num(k, v)?),
                "max_gap_days" => c.max_gap_days = parse_num(k, v)?,
                "variogram_families" => c.families = parse_families(v)?,
                "seed" => c.seed = parse_num(k, v)?,
                "threads" => c.threads = parse_num(k, v)?,
                _ => unreachable!("key checked against KNOWN_KEYS"),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn validate(&self) -> Result<()> {
        if !(self.z0 > 0.0) {
            bail!("z0 must be positive, got {}", self.z0);
        }
        if let (Some(e), Some(s)) = (self.epoch_date, self.split_date) {
            if e >= s {
                bail!("epoch_date {e} must precede split_date {s}");
            }
        }
        if !(self.bin_width_km > 0.0) {
            bail!("bin_width_km must be positive");
        }
        if self.families.is_empty() {
            bail!("variogram_families is empty");
        }
        Ok(())
    }

    pub fn epoch(&self) -> Result<NaiveDate> {
        self.epoch_date.ok_or_else(|| anyhow!("config key `epoch_date` is required"))
    }

    pub fn split(&self) -> Result<NaiveDate> {
        self.split_date.ok_or_else(|| anyhow!("config key `split_date` is required for benchmark"))
    }

    pub fn forecast_path(&self) -> Result<&Path> {
        self.forecast_csv.as_deref().ok_or_else(|| anyhow!("config key `forecast_csv` is required"))
    }

    pub fn station_path(&self) -> Result<&Path> {
        self.station_csv.as_deref().ok_or_else(|| anyhow!("config key `station_csv` is required"))
    }

    /// Configured bounds, with any missing edge taken from the site bounding
    /// box snapped outward to the raster step.
    pub fn raster_spec(&self, sites: &[(f64, f64)]) -> Result<RasterSpec> {
        let step = self.raster_step_deg;
        let snap_down = |v: f64| (v / step).floor() * step;
        let snap_up = |v: f64| (v / step).ceil() * step;
        let fold = |f: fn(f64, f64) -> f64, init: f64, sel: fn(&(f64, f64)) -> f64| sites.iter().map(sel).fold(init, f);
        let lat_min = self.raster.lat_min.unwrap_or_else(|| snap_down(fold(f64::min, f64::INFINITY, |s| s.0)));
        let lat_max = self.raster.lat_max.unwrap_or_else(|| snap_up(fold(f64::max, f64::NEG_INFINITY, |s| s.0)));
        let lon_min = self.raster.lon_min.unwrap_or_else(|| snap_down(fold(f64::min, f64::INFINITY, |s| s.1)));
        let lon_max = self.raster.lon_max.unwrap_or_else(|| snap_up(fold(f64::max, f64::NEG_INFINITY, |s| s.1)));
        Ok(RasterSpec::new(lat_min, lat_max, lon_min, lon_max, step)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_defaults() {
        let text = "# run\nforecast_csv = data/f.csv\nepoch_date=2015-02-01\nsplit_date = 2019-07-01 # inline\nvariogram_families = nugget, spherical, exponential+hole_effect\nseed = 7\n";
        let c = RunConfig::parse(text, Path::new("/tmp/run")).unwrap();
        assert_eq!(c.forecast_csv, Some(PathBuf::from("/tmp/run/data/f.csv")));
        assert_eq!(c.seed, 7);
        assert_eq!(c.z0, 0.0024);
        assert_eq!(c.raster_step_deg, 0.01);
        assert_eq!(c.families.len(), 3);
        assert_eq!(c.families[2].to_string(), "exponential+hole_effect");
        assert_eq!(c.output_dir, PathBuf::from("/tmp/run/out"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("colour = blue", Path::new(".")).is_err());
        assert!(RunConfig::parse("z0 = 0", Path::new(".")).is_err());
        assert!(RunConfig::parse("epoch_date = 2020-01-01\nsplit_date = 2019-01-01", Path::new(".")).is_err());
        assert!(RunConfig::parse("just text", Path::new(".")).is_err());
        assert!(RunConfig::parse("variogram_families = a+b+c", Path::new(".")).is_err());
    }

    #[test]
    fn raster_defaults_to_site_box() {
        let c = RunConfig {
            raster_step_deg: 0.5,
            ..RunConfig::default()
        };
        let spec = c.raster_spec(&[(32.7, -117.2), (34.1, -116.4)]).unwrap();
        assert_eq!((spec.lat_min, spec.lat_max, spec.lon_min, spec.lon_max), (32.5, 34.5, -117.5, -116.0));
    }
}
