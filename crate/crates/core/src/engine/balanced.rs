use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{draw_kept, MeasurableState, MAX_DISCARDS};
use crate::error::{Error, Result};
use crate::keyl::{sample_keyl_product, KeylConfig, SamplerStats};
use crate::partition::theta;
use crate::tensor::{c, CMatrix, Deviation};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BalancedConfig {
    pub keyl: KeylConfig,
    /// Keep every per-batch `D_j` in the output.
    pub keep_records: bool,
    /// Replace `t` by `⌊0.01 d²⌋` when `0.01 d² ≤ t ≤ d²`. Off by default
    /// because the reduced batch size is zero for `d < 10`.
    pub entanglement_cap_rule: bool,
}

#[derive(Clone, Debug)]
pub struct BalancedEstimate {
    pub e_hat: Deviation,
    pub theta_used: f64,
    pub m: usize,
    pub t: usize,
    pub mean_d: CMatrix,
    pub sampler_stats: SamplerStats,
    pub discarded: u64,
    pub records: Vec<CMatrix>,
}

/// `Ê = t(d²−1)/(dθ)·(mean − I/d)`.
fn estimate_from_sum(d: usize, t: usize, theta_v: f64, sum: &CMatrix, m: usize) -> (CMatrix, Deviation) {
    let mean = sum / c(m as f64);
    let df = d as f64;
    let scale = t as f64 * (df * df - 1.0) / (df * theta_v);
    let centred = &mean - CMatrix::identity(d, d) / c(df);
    (mean, Deviation::center(&(centred * c(scale))))
}

/// Recomputes `Ê` from stored per-batch estimates, in the same order and
/// with the same arithmetic as [`learn_balanced`].
pub fn replay_balanced(d: usize, t: usize, records: &[CMatrix]) -> Result<Deviation> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records to replay"));
    }
    let theta_v = theta(t, d)?;
    let mut sum = CMatrix::zeros(d, d);
    for r in records {
        sum += r;
    }
    Ok(estimate_from_sum(d, t, theta_v, &sum, records.len()).1)
}

/// The balanced-state estimator on `m` Keyl-measured batches of size `t`.
pub fn learn_balanced(
    source: &dyn MeasurableState,
    t: usize,
    m: usize,
    rng: &mut dyn RngCore,
    cfg: &BalancedConfig,
) -> Result<BalancedEstimate> {
    if m == 0 {
        return Err(Error::EmptyInput("learn_balanced needs m ≥ 1"));
    }
    if t == 0 {
        return Err(Error::EmptyInput("batch size must be positive"));
    }
    let d = source.dim();
    if t > d * d {
        return Err(Error::Precondition(format!("batch size {t} exceeds d² = {}", d * d)));
    }
    let mut t_eff = t;
    if cfg.entanglement_cap_rule {
        let cap = (0.01 * (d * d) as f64).floor() as usize;
        if cap as f64 <= t as f64 && cap >= 1 {
            t_eff = cap;
        }
    }
    let theta_v = theta(t_eff, d)?;
    let mut sum = CMatrix::zeros(d, d);
    let mut stats = SamplerStats::default();
    let mut discarded = 0;
    let mut records = Vec::new();
    for _ in 0..m {
        let batch = draw_kept(source, t_eff, rng, &mut discarded, MAX_DISCARDS)?;
        let ops: Vec<&CMatrix> = batch.iter().collect();
        let o = sample_keyl_product(&ops, rng, &cfg.keyl)?;
        stats.record(&o);
        sum += &o.estimate;
        if cfg.keep_records {
            records.push(o.estimate);
        }
    }
    let (mean_d, e_hat) = estimate_from_sum(d, t_eff, theta_v, &sum, m);
    Ok(BalancedEstimate {
        e_hat,
        theta_used: theta_v,
        m,
        t: t_eff,
        mean_d,
        sampler_stats: stats,
        discarded,
        records,
    })
}
