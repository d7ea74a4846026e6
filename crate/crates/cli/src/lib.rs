//! Driver for the simulation studies: reads a JSON config, runs one command
//! and writes CSV tables plus a `metadata.json` sidecar into the output
//! directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod tables;

pub use commands::{run_config, RunManifest, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Command {
    SimulateRates,
    SimulateEfficiency,
    RateTest,
    ScoreCurve,
    FiltersCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SimulateRates => "simulate-rates",
            Command::SimulateEfficiency => "simulate-efficiency",
            Command::RateTest => "rate-test",
            Command::ScoreCurve => "score-curve",
            Command::FiltersCheck => "filters-check",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<invreg_core::Error> for CliError {
    fn from(e: invreg_core::Error) -> Self {
        CliError::Numeric(e.to_string())
    }
}
