//! `equimean <subcommand> --config path [--seed N] [--out dir]`
//!
//! Exit codes: 0 when every check passed, 1 when a check failed, 2 for usage,
//! configuration and I/O errors.

mod config;
mod output;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{0}")]
    Core(#[from] equimean::Error),
}

impl CliError {
    /// A failed hypothesis or an unstable numeric check is a check failure; everything else is input.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(equimean::Error::ViolatedHypothesis { .. })
            | CliError::Core(equimean::Error::NumericalInstability(_)) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "equimean", version, about = "Experiments on equivariant means and dyadic contractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for reports, tables and plots.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the laws of a mean.
    VerifyMean,
    /// Estimate the contraction constant of a mean.
    EstimateLambda,
    /// Decompose a dyadic pair into chains.
    Chain { s: Option<String>, t: Option<String> },
    /// Tabulate the dyadic contraction of one point.
    BuildHomotopy,
    /// Check the adjacent-difference bound level by level.
    VerifyClaim1,
    /// Check the Hölder bound on random dyadic pairs.
    VerifyHolder,
    /// Average a homotopy over a group action.
    Symmetrize,
    /// Deform the space onto a fixed-point set.
    DeformFixed,
    /// Search for a tuple whose mean is far from every input.
    SolomonicSearch,
    /// Render a trajectory CSV as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
    },
    /// Print the config JSON Schema.
    Schema,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EQUIMEAN_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run::dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("equimean: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
