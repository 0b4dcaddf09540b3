//! Command-line driver for `antac-core`: `fit`, `simulate`, `evaluate` and `study`.
//!
//! Exit codes are 0 on success, 2 for bad input, 3 for numerical failure and
//! 4 when some columns, pairs or replicates failed but results were written.

pub mod commands;
pub mod error;
pub mod manifest;
pub mod options;
pub mod table;

use clap::{Parser, Subcommand};

pub use error::{exit, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "antac",
    version,
    about = "Covariate-adjusted Gaussian graphical model estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate edges, standard errors and the selected graph from X and Y.
    Fit(commands::fit::FitArgs),
    /// Draw a model and write replicate datasets with their ground truth.
    Simulate(commands::simulate::SimulateArgs),
    /// Score an edge table against a true support.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Run a replicate study described by a TOML file.
    Study(commands::study::StudyArgs),
}

pub fn run(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Fit(a) => commands::fit::run(a),
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Study(a) => commands::study::run(a),
    }
}
