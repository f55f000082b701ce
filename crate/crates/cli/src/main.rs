//! `windkrig`: fit, krige and benchmark daily wind-speed models.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::error;

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "windkrig", version, about = "Kriged day-ahead wind-speed forecasts")]
struct Cli {
    /// Run configuration (`key = value` lines).
    #[arg(long, global = true, default_value = "windkrig.conf")]
    config: PathBuf,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the temporal model at every forecast grid point.
    Fit,
    /// Estimate and fit a semivariogram for each parameter.
    Variogram,
    /// Krige every parameter onto the raster.
    Krige,
    /// Forecast at each station from kriged parameters.
    Predict,
    /// Score station forecasts against observations and persistence.
    Benchmark,
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .context("starting worker pool")?;
    match cli.command {
        Command::Fit => commands::cmd_fit(&cfg),
        Command::Variogram => commands::cmd_variogram(&cfg),
        Command::Krige => commands::cmd_krige(&cfg),
        Command::Predict => commands::cmd_predict(&cfg),
        Command::Benchmark => commands::cmd_benchmark(&cfg),
    }
}

/// Malformed input exits with 2, every other failure with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    let input = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<windkrig::Error>(),
            Some(windkrig::Error::Parse { .. } | windkrig::Error::Csv(_))
        )
    });
    if input {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
