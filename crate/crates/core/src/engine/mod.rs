//! Learning algorithms built on simulated measurement access.
//!
//! Every routine consumes a [`MeasurableState`] and draws outcomes with the
//! exact Born rule, so mixtures, splitting and conditioning compose freely.

mod balanced;
mod baseline;
mod bounded;
mod full;
mod median;
mod refined;
mod source;

pub use balanced::{learn_balanced, replay_balanced, BalancedConfig, BalancedEstimate};
pub use baseline::{single_copy_estimate, unentangled_baseline, BaselineEstimate};
pub use bounded::{learn_bounded, learn_projector, BoundedOutput, ProjectorOutput};
pub use full::{full_learn, ladder_depth, FullConfig, FullOutput, LadderLevel, ProjectorLadder};
pub use median::geometric_median;
pub use refined::{learn_balanced_refined, RefinedConfig, RefinedOutput};
pub use source::{
    ConditionedSource, DirectSource, MeasurableState, MixtureSource, RotatedSource, SplitSource,
};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::draw_index;
use crate::tensor::{product_expectation, CMatrix, CVector};

/// Copies of the unknown state consumed, broken down by stage.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CopyBudget {
    pub n_total: u64,
    pub per_stage: Vec<(String, u64)>,
}

impl CopyBudget {
    pub fn add(&mut self, label: impl Into<String>, n: u64) {
        self.n_total += n;
        self.per_stage.push((label.into(), n));
    }

    /// True when the total equals the sum of the breakdown.
    pub fn is_consistent(&self) -> bool {
        self.per_stage.iter().map(|(_, n)| n).sum::<u64>() == self.n_total
    }
}

/// Born probabilities of a rank-one POVM `{z z†}` on `ω_0 ⊗ … ⊗ ω_{t-1}`.
pub fn born_probabilities(batch: &[CMatrix], povm: &[CVector]) -> Vec<f64> {
    let ops: Vec<&CMatrix> = batch.iter().collect();
    povm.iter()
        .map(|z| product_expectation(&ops, z.as_slice()).re.max(0.0))
        .collect()
}

/// Measures one batch from `source` with a rank-one POVM on `C^{d^t}`.
/// Returns `None` when the source discarded the batch.
pub fn measure_povm(
    source: &dyn MeasurableState,
    t: usize,
    povm: &[CVector],
    rng: &mut dyn RngCore,
) -> Result<Option<usize>> {
    let d = source.dim();
    let dim = crate::tensor::checked_pow(d, t).ok_or_else(|| Error::Resource("d^t overflows".into()))?;
    crate::split::check_povm(povm, dim, 1e-8)?;
    let Some(batch) = source.draw_batch(t, rng)? else {
        return Ok(None);
    };
    let w = born_probabilities(&batch, povm);
    Ok(Some(draw_index(&w, rng)))
}

/// Draws batches until one is not discarded, up to `max_attempts`.
pub(crate) fn draw_kept(
    source: &dyn MeasurableState,
    t: usize,
    rng: &mut dyn RngCore,
    discarded: &mut u64,
    max_attempts: u64,
) -> Result<Vec<CMatrix>> {
    for _ in 0..max_attempts {
        if let Some(b) = source.draw_batch(t, rng)? {
            return Ok(b);
        }
        *discarded += 1;
    }
    Err(Error::Resource(format!(
        "source discarded {max_attempts} consecutive batches of size {t}"
    )))
}

/// Upper limit on consecutive discarded batches before giving up.
pub(crate) const MAX_DISCARDS: u64 = 10_000;

/// Bernoulli draw used by the binary `(P, I−P)` measurement.
pub(crate) fn bernoulli(p: f64, rng: &mut dyn RngCore) -> bool {
    rng.random::<f64>() < p
}
