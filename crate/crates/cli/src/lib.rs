//! The `wristband` command-line pipeline.
//!
//! `simulate` writes replay files, `train` fits a model from a strain and an
//! IMU file, `estimate` runs a saved model over a strain file alone, and
//! `evaluate` scores estimates against IMU ground truth.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{evaluate, estimate, simulate, train};
pub use config::RunConfig;
pub use error::{exit, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "wristband", version, about = "Wrist angle estimation from a strain-sensor band")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic strain and IMU replay files.
    Simulate(SimulateArgs),
    /// Align streams, search the node count, train online and save the model.
    Train(TrainArgs),
    /// Estimate wrist angles from a strain file with a saved model.
    Estimate(EstimateArgs),
    /// Score estimates against IMU ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Scenario TOML file (a previous manifest.toml works).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in scenario: nominal, clean or misaligned.
    #[arg(long)]
    pub preset: Option<String>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub strain: PathBuf,
    #[arg(long)]
    pub imu: PathBuf,
    /// Run configuration TOML file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the run seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub strain: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Run configuration TOML file; only the `[circuit]` section is read.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub estimates: PathBuf,
    #[arg(long)]
    pub imu: PathBuf,
    /// Label written into the report.
    #[arg(long, default_value = "unnamed")]
    pub scenario: String,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs one command and returns the summary line for stdout.
pub fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Simulate(a) => simulate(&a).map(|s| s.to_string()),
        Command::Train(a) => train(&a).map(|s| s.to_string()),
        Command::Estimate(a) => estimate(&a).map(|s| s.to_string()),
        Command::Evaluate(a) => evaluate(&a).map(|s| s.to_string()),
    }
}
