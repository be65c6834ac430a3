//! Experiment harness: JSON configs in, CSV and JSON artifacts out.

pub mod config;
pub mod output;
pub mod run;
pub mod verify;

pub use config::{Algorithm, Command, ExperimentConfig, StateSpec};
pub use run::{run, RunOptions, RunSummary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] schurtomo::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for bad configuration, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
