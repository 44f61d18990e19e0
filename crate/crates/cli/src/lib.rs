//! Command-line experiments for load-aware cell selection.
//!
//! Each subcommand reads a scenario file, runs one experiment and writes a
//! JSON or CSV result to `--out` (or stdout). Output depends only on the
//! scenario, the flags and the seed.

pub mod commands;
pub mod scenario;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::scenario::Overrides;

#[derive(Debug, Parser)]
#[command(
    name = "cellsel",
    version,
    about = "Load-aware initial cell search and selection experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the maximum throughput and the connection threshold (JSON).
    Solve(SolveArgs),
    /// Simulated throughput over a grid of thresholds (CSV).
    Sweep(SweepArgs),
    /// One search trace without stopping (CSV).
    Trace(TraceArgs),
    /// Throughput of fixed-length scans versus optimal stopping (CSV).
    Compare(CompareArgs),
    /// Two-tier load distribution under one association scheme (CSV).
    Twotier(TwoTierArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output file; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace the number of beam pairs.
    #[arg(long)]
    pub beam_pairs: Option<u32>,
    /// Replace the data time, seconds.
    #[arg(long)]
    pub t_data: Option<f64>,
    /// Replace the load with a Poisson load of this mean.
    #[arg(long)]
    pub mean_load: Option<f64>,
}

impl Common {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            beam_pairs: self.beam_pairs,
            t_data_s: self.t_data,
            mean_active_ues: self.mean_load,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Seed for sampling the reward distribution; defaults to `solver.sample_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: u64,
    /// Periods per grid point; defaults to `simulation.periods`.
    #[arg(long)]
    pub periods: Option<u64>,
    /// Thresholds in bit/s/Hz: `lo:hi:count` or a comma-separated list.
    #[arg(long)]
    pub grid: String,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: u64,
    /// Number of cells to examine.
    #[arg(long)]
    pub cells: u64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub periods: Option<u64>,
    /// Comma-separated strategies (`max_power:N`, `max_metric:N`,
    /// `optimal_stopping`); defaults to scans of 10 and 30 cells plus
    /// optimal stopping.
    #[arg(long)]
    pub strategies: Option<String>,
}

#[derive(Debug, Args)]
pub struct TwoTierArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub seed: u64,
    /// `max_power`, `max_snr` or `max_metric`.
    #[arg(long)]
    pub scheme: String,
    /// Number of independent realizations.
    #[arg(long, visible_alias = "seeds", default_value_t = 1)]
    pub realizations: u64,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let (bytes, out) = match &cli.command {
        Command::Solve(a) => (commands::solve(a)?, &a.common.out),
        Command::Sweep(a) => (commands::sweep(a)?, &a.common.out),
        Command::Trace(a) => (commands::trace(a)?, &a.common.out),
        Command::Compare(a) => (commands::compare(a)?, &a.common.out),
        Command::Twotier(a) => (commands::twotier(a)?, &a.common.out),
    };
    emit(&bytes, out.as_deref())
}

fn emit(bytes: &[u8], out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => io::stdout()
            .lock()
            .write_all(bytes)
            .context("writing to stdout"),
    }
}
