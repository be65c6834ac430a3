use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use schurtomo::schur::{MAX_DIM, MAX_T};
use schurtomo::tensor::checked_pow;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Verify,
    SwSample,
    KeylSample,
    TomoRun,
    ScalingSweep,
    Diagnostics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::SwSample => "sw-sample",
            Command::KeylSample => "keyl-sample",
            Command::TomoRun => "tomo-run",
            Command::ScalingSweep => "scaling-sweep",
            Command::Diagnostics => "diagnostics",
        }
    }
}

/// Learner used by `tomo-run` and `scaling-sweep`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Full pipeline; `n` is the number of single-copy baseline measurements.
    #[default]
    Full,
    /// Balanced estimator; `n` is the number of Keyl-measured batches.
    Balanced,
    /// Single-copy baseline alone; `n` is the number of copies.
    Baseline,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    #[default]
    MaximallyMixed,
    /// Diagonal state with the given eigenvalues (must sum to one).
    Diagonal { values: Vec<f64> },
    /// Fresh `(I + σG)/d` with `‖G‖ ≤ cap` for every trial.
    HardInstance {
        sigma: f64,
        #[serde(default = "default_cap")]
        cap: f64,
    },
    /// JSON file `{"re": [[..]], "im": [[..]]}`; `im` may be omitted.
    File { path: PathBuf },
}

fn default_cap() -> f64 {
    4.0
}

fn default_eps() -> f64 {
    0.1
}

fn default_delta() -> f64 {
    0.1
}

fn default_slack() -> Option<f64> {
    Some(2.0)
}

fn default_trials() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub command: Command,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub state: StateSpec,
    /// Slack on the full learner's batch-size limit `t ≤ slack·(√d/ε)^{0.2}`;
    /// `null` disables the check.
    #[serde(default = "default_slack")]
    pub t_limit_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| bad(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Batch sizes to run: `t_list` if present, otherwise `[t]`.
    pub fn ts(&self) -> Vec<usize> {
        match (&self.t_list, self.t) {
            (Some(l), _) => l.clone(),
            (None, Some(t)) => vec![t],
            (None, None) => Vec::new(),
        }
    }

    pub fn ns(&self) -> Vec<usize> {
        match (&self.n_list, self.n) {
            (Some(l), _) => l.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn first_t(&self) -> usize {
        self.ts()[0]
    }

    pub fn first_n(&self) -> usize {
        self.ns()[0]
    }

    /// Checks every invariant the commands rely on.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema != SCHEMA_VERSION {
            return Err(bad(format!("unsupported schema {} (expected {SCHEMA_VERSION})", self.schema)));
        }
        if self.seed.is_none() {
            return Err(bad("a seed is required (config field or --seed)"));
        }
        if self.d == 0 || self.d > 64 {
            return Err(bad(format!("d = {} outside 1..=64", self.d)));
        }
        let ts = self.ts();
        if ts.is_empty() {
            return Err(bad("t or t_list is required"));
        }
        for &t in &ts {
            if t == 0 || t > MAX_T {
                return Err(bad(format!("t = {t} outside 1..={MAX_T}")));
            }
            match checked_pow(self.d, t) {
                Some(n) if n <= MAX_DIM => {}
                _ => return Err(bad(format!("d^t exceeds {MAX_DIM} for d = {}, t = {t}", self.d))),
            }
        }
        let needs_n = !matches!(self.command, Command::Verify);
        let ns = self.ns();
        if needs_n && ns.is_empty() {
            return Err(bad(format!("{} needs n or n_list", self.command.name())));
        }
        if ns.iter().any(|&n| n == 0) {
            return Err(bad("n must be positive"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(bad("eps must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(bad("delta must lie in (0, 1)"));
        }
        if self.trials == 0 {
            return Err(bad("trials must be positive"));
        }
        if matches!(self.command, Command::Verify) && checked_pow(self.d, self.first_t()).unwrap_or(usize::MAX) > 1024 {
            return Err(bad("verify builds dense projectors and needs d^t ≤ 1024"));
        }
        match &self.state {
            StateSpec::Diagonal { values } if values.len() != self.d => {
                Err(bad(format!("diagonal state has {} entries, expected {}", values.len(), self.d)))
            }
            StateSpec::HardInstance { sigma, cap } if !(*sigma >= 0.0 && cap * sigma < 1.0) => {
                Err(bad(format!("hard instance needs cap·σ < 1, got σ = {sigma}, cap = {cap}")))
            }
            StateSpec::HardInstance { .. } if self.d < 2 => Err(bad("hard instances need d ≥ 2")),
            _ => Ok(()),
        }
    }
}
