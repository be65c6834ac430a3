use thiserror::Error;

/// Errors raised by the simulation and learning routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    #[error("sampler budget exhausted after {trials} rejection trials and {chain_steps} chain steps (partition {lambda:?})")]
    SamplerBudget {
        lambda: Vec<usize>,
        trials: usize,
        chain_steps: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
