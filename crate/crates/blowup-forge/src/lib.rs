//! Configuration, file output and the five pipelines behind the `blowup-forge` binary.
//!
//! Every command reads one flat JSON [`RunConfig`], writes CSV tables (header row, LF line
//! endings, 17 significant digits) and a JSON manifest into the output directory, and reports
//! a list of named invariants. The binary exits with 0 when all of them hold, 1 when one
//! fails or a pipeline errors, and 2 on usage or configuration errors.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_parametrix, cmd_profile, cmd_residual, cmd_simulate, cmd_spectral, Report};
pub use config::RunConfig;
pub use output::{fmt_f64, Invariant, Table};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("numerics: {0}")]
    Numerics(String),
}

impl ForgeError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ForgeError::Usage(_) | ForgeError::Config(_) => 2,
            ForgeError::Io(_) | ForgeError::Numerics(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Profile,
    Residual,
    Spectral,
    Parametrix,
    Simulate,
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Report, ForgeError> {
    match cmd {
        Command::Profile => cmd_profile(cfg),
        Command::Residual => cmd_residual(cfg),
        Command::Spectral => cmd_spectral(cfg),
        Command::Parametrix => cmd_parametrix(cfg),
        Command::Simulate => cmd_simulate(cfg),
    }
}
