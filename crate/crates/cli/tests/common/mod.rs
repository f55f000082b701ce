//! Synthetic forecast and station files drawn from the temporal model.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use windkrig::temporal::{simulate_log_series, TemporalParams};

pub const EPOCH: &str = "2015-02-01";
pub const Z0: f64 = 0.0024;

pub fn epoch() -> NaiveDate {
    NaiveDate::parse_from_str(EPOCH, "%Y-%m-%d").unwrap()
}

/// Smooth north-south gradient in the mean level.
pub fn params_at(lat: f64, lon: f64) -> TemporalParams {
    let mut a = [0.0; 13];
    a[0] = 1.6 + 0.25 * (lat - 33.0) - 0.1 * (lon + 117.0);
    a[1] = 0.3;
    a[2] = -0.1;
    a[4] = 0.05;
    TemporalParams {
        a,
        alpha: [0.5, 0.12],
        b: [0.1, 0.02, 0.0],
        epoch_date: epoch(),
    }
}

/// A 0.2 degree grid with a fixed jitter, so pair distances spread over
/// many lag bins.
pub fn grid_sites(n_lat: usize, n_lon: usize) -> Vec<(String, f64, f64)> {
    let mut out = Vec::new();
    for i in 0..n_lat {
        for j in 0..n_lon {
            let k = (i * n_lon + j) as f64;
            let lat = 32.6 + 0.2 * i as f64 + 0.05 * (1.7 * k).sin();
            let lon = -117.4 + 0.2 * j as f64 + 0.05 * (2.3 * k).cos();
            out.push((format!("G{i}{j}"), (lat * 1e4).round() / 1e4, (lon * 1e4).round() / 1e4));
        }
    }
    out
}

fn series(lat: f64, lon: f64, days: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_log_series(&params_at(lat, lon), 0, days, &mut rng)
}

/// Six-hourly releases with lead hours 0-5; each day's hourly speed equals
/// its simulated daily mean.
pub fn forecast_csv(sites: &[(String, f64, f64)], days: usize) -> String {
    let mut s = String::from("site_id,lat,lon,release_time_utc,lead_hour,u_mps,v_mps\n");
    for (k, (id, lat, lon)) in sites.iter().enumerate() {
        let w = series(*lat, *lon, days, k as u64);
        for (d, wd) in w.iter().enumerate() {
            let day = epoch() + Duration::days(d as i64);
            for release in [0, 6, 12, 18] {
                for lead in 0..6 {
                    writeln!(s, "{id},{lat},{lon},{day}T{release:02}:00:00Z,{lead},{:.6},0", wd.exp()).unwrap();
                }
            }
        }
    }
    s
}

/// Hourly 10 m reports in knots at each station.
pub fn station_csv(stations: &[(String, f64, f64)], days: usize) -> String {
    let lift = (100.0f64 / Z0).ln() / (10.0f64 / Z0).ln();
    let mut s = String::from("site_id,lat,lon,timestamp_utc,wind_speed_kt\n");
    for (k, (id, lat, lon)) in stations.iter().enumerate() {
        let w = series(*lat, *lon, days, 1000 + k as u64);
        for (d, wd) in w.iter().enumerate() {
            let day = epoch() + Duration::days(d as i64);
            let kt = wd.exp() / lift / 0.514444;
            for hour in 0..24 {
                writeln!(s, "{id},{lat},{lon},{day}T{hour:02}:00:00Z,{kt:.4}").unwrap();
            }
        }
    }
    s
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new(config: &str, files: &[(&str, &str)]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("run.conf"), config).unwrap();
        for (name, text) in files {
            fs::write(dir.path().join(name), text).unwrap();
        }
        Workspace { dir }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.path().join("out").join(name)
    }

    pub fn read(&self, name: &str) -> String {
        fs::read_to_string(self.out(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    pub fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_windkrig"))
            .arg("--config")
            .arg(self.path().join("run.conf"))
            .args(args)
            .output()
            .unwrap()
    }

    pub fn run_ok(&self, args: &[&str]) -> Output {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
        out
    }
}
