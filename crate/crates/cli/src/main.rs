//! `fixen`: forward sweeps, conversions, thresholds, verification and
//! reconstruction for fixed-energy charged-particle data.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver failure,
//! 3 verification failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<fixen::Error> for CliError {
    fn from(e: fixen::Error) -> Self {
        match e {
            fixen::Error::Config(_) | fixen::Error::Io(_) | fixen::Error::InvalidParameter(_) => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// Scattering data to boundary data.
    S2b,
    /// Boundary data to scattering data.
    B2s,
}

#[derive(Debug, Parser)]
#[command(name = "fixen", version, about = "Fixed-energy boundary and scattering data for charged particles")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Energy (overrides the configuration).
    #[arg(long, global = true)]
    energy: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Sampling seed (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trajectory dumps from configured or random starts.
    Simulate,
    /// Boundary data on all grid pairs.
    BoundarySweep,
    /// Scattering data for random incoming asymptotes.
    ScatteringSweep,
    /// Converts a dataset between scattering and boundary form.
    Convert {
        #[arg(long, value_enum)]
        direction: Direction,
    },
    /// Threshold constants and conditions.
    Thresholds,
    /// Runs named checks; `all` or a comma-separated list.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        /// Same as `--suite`.
        name: Option<String>,
    },
    /// Least-squares fit of a bump family to a boundary dataset.
    Reconstruct,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fixen: {e}");
            ExitCode::from(e.code())
        }
    }
}
