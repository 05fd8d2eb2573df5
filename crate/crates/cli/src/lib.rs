//! Command-line harness: TOML configs in, CSV and JSON files out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{
    load, parse_file, ContinuousSweepConfig, DetectorCalibConfig, DiscreteSweepConfig, FokkerPlanckConfig,
    QecReportConfig, SingleRunConfig,
};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "holozeno", version, about = "Holonomic gates protected by Zeno-effect measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides master_seed from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo no-fault probability over a grid of rotation increments.
    DiscreteSweep,
    /// Jump probability under continuous measurement: closed form, moment ODE and SSE.
    ContinuousSweep,
    /// Detection statistics of the CUSUM detector on synthetic currents.
    DetectorCalib,
    /// Ancilla counts, X search and rotated Knill–Laflamme checks for stabilizer codes.
    QecReport,
    /// Stationary density of the single-qubit angle diffusion.
    FokkerPlanck,
    /// One discrete or continuous trajectory (the config file is required).
    SingleRun,
}

fn seeded<T>(mut cfg: T, seed: Option<u64>, field: impl FnOnce(&mut T) -> &mut u64) -> T {
    if let Some(s) = seed {
        *field(&mut cfg) = s;
    }
    cfg
}

/// Runs one command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Parameter(format!("threads: {e}")))?;
    }
    let config = cli.config.as_deref();
    let out: &Path = &cli.out;
    match cli.command {
        Command::DiscreteSweep => {
            let cfg = seeded(load::<DiscreteSweepConfig>(config)?, cli.seed, |c| &mut c.master_seed);
            commands::discrete::run(&cfg, out)
        }
        Command::ContinuousSweep => {
            let cfg = seeded(load::<ContinuousSweepConfig>(config)?, cli.seed, |c| &mut c.master_seed);
            commands::continuous::run(&cfg, out)
        }
        Command::DetectorCalib => {
            let cfg = seeded(load::<DetectorCalibConfig>(config)?, cli.seed, |c| &mut c.master_seed);
            commands::detector::run(&cfg, out)
        }
        Command::QecReport => commands::qec::run(&load::<QecReportConfig>(config)?, out),
        Command::FokkerPlanck => {
            let cfg = seeded(load::<FokkerPlanckConfig>(config)?, cli.seed, |c| &mut c.master_seed);
            commands::fokker_planck::run(&cfg, out)
        }
        Command::SingleRun => {
            let path = config.ok_or_else(|| CliError::Parameter("single-run needs --config".into()))?;
            let cfg = seeded(parse_file::<SingleRunConfig>(path)?, cli.seed, |c| match c {
                SingleRunConfig::Discrete(d) => &mut d.master_seed,
                SingleRunConfig::Continuous(c) => &mut c.master_seed,
            });
            commands::single::run(&cfg, out)
        }
    }
}
