//! Reproducible experiment runner for the permlaw library.
//!
//! A TOML config names one command, its data (a matrix file or an
//! `[environment]` block) and parameters. `run` executes every `(n, seed)`
//! unit and `write_outputs` produces `results.csv`, `summary.json` and
//! `plot.gp` in the output directory.

pub mod config;
pub mod output;
pub mod runner;

use thiserror::Error;

pub use config::{Command, ExperimentConfig, Violation};
pub use output::ResultRow;
pub use runner::{run, write_outputs, RunOutput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid config:\n{}", .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Compute(#[from] permlaw_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for config problems, 1 for everything that fails while computing
    /// or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => 2,
            _ => 1,
        }
    }
}
