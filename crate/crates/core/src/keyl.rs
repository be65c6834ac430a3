//! Born-rule sampling of Keyl's measurement on product states.
//!
//! An outcome is drawn in two steps. The partition `λ` comes from weak Schur
//! sampling, computed exactly with the character formula. Given `λ`, the
//! unitary `U` has density proportional to
//! `s(U) = tr(U^{⊗t} M_λ U^{†⊗t} ω_0⊗…⊗ω_{t-1})` against Haar measure and is
//! drawn by rejection from Haar proposals. The envelope is
//! `dim(λ)·Π‖ω_i‖`. When the trial budget runs out, an independence
//! Metropolis chain with Haar proposals takes over and the outcome is
//! marked as approximate.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::partition::{draw_index, Partition, SwDistribution};
use crate::schur::{schur_system, SchurBlock, SchurSystem};
use crate::tensor::{
    c, haar_unitary, product_expectation, CMatrix, DensityMatrix, HermitianEigen, PureVector,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeylConfig {
    /// Haar proposals tried before switching to the Metropolis chain.
    pub max_trials: usize,
    /// Total Metropolis steps per outcome.
    pub chain_length: usize,
    /// Leading chain steps that are never returned.
    pub burn_in: usize,
}

impl Default for KeylConfig {
    fn default() -> Self {
        Self {
            max_trials: 10_000,
            chain_length: 512,
            burn_in: 128,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    /// Exact rejection sample.
    Rejection,
    /// Final state of the fallback chain (not exact).
    Metropolis,
}

#[derive(Clone, Debug)]
pub struct KeylOutcome {
    pub lam: Partition,
    pub u: CMatrix,
    /// `D = U diag(λ/t) U†`.
    pub estimate: CMatrix,
    pub accept_trials: usize,
    pub mode: SamplerMode,
}

impl KeylOutcome {
    fn new(lam: Partition, u: CMatrix, accept_trials: usize, mode: SamplerMode) -> Self {
        let d = u.nrows();
        let t = lam.total() as f64;
        let spec: Vec<f64> = lam.padded(d).iter().map(|&l| l as f64 / t).collect();
        let estimate = &u * crate::tensor::diag(&spec) * u.adjoint();
        Self {
            lam,
            u,
            estimate,
            accept_trials,
            mode,
        }
    }
}

/// Aggregate sampler diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplerStats {
    pub outcomes: u64,
    pub proposals: u64,
    pub metropolis_outcomes: u64,
}

impl SamplerStats {
    pub fn record(&mut self, o: &KeylOutcome) {
        self.outcomes += 1;
        self.proposals += o.accept_trials as u64;
        if o.mode == SamplerMode::Metropolis {
            self.metropolis_outcomes += 1;
        }
    }

    pub fn merge(&mut self, other: &SamplerStats) {
        self.outcomes += other.outcomes;
        self.proposals += other.proposals;
        self.metropolis_outcomes += other.metropolis_outcomes;
    }

    /// True when every outcome came from exact rejection sampling.
    pub fn exact(&self) -> bool {
        self.metropolis_outcomes == 0
    }
}

/// `s(U) = Σ_j v_j† (⊗_i U†ω_iU) v_j` over the basis of `M_λ`.
pub fn keyl_density(block: &SchurBlock, u: &CMatrix, omegas: &[&CMatrix]) -> f64 {
    let rotated: Vec<CMatrix> = omegas.iter().map(|w| u.adjoint() * *w * u).collect();
    let ops: Vec<&CMatrix> = rotated.iter().collect();
    block
        .complex_basis()
        .iter()
        .map(|v| product_expectation(&ops, v).re)
        .sum::<f64>()
        .max(0.0)
}

/// Weak Schur probabilities `tr(Π_λ ω_0⊗…⊗ω_{t-1})` for a product state.
pub fn weak_schur_probs_product(omegas: &[&CMatrix]) -> Result<Vec<(Partition, f64)>> {
    let (sys, q) = system_and_probs(omegas)?;
    Ok(sys.blocks.iter().map(|b| b.lam.clone()).zip(q).collect())
}

fn system_and_probs(omegas: &[&CMatrix]) -> Result<(std::sync::Arc<SchurSystem>, Vec<f64>)> {
    let t = omegas.len();
    if t == 0 {
        return Err(Error::EmptyInput("product state with no factors"));
    }
    let d = omegas[0].nrows();
    let sys = schur_system(d, t)?;
    let q = sys.product_state_probs(omegas)?;
    Ok((sys, q))
}

/// `q_λ = tr(Π_λ ρ^{⊗t})` for every `λ ⊢ t` with at most `d` rows.
pub fn weak_schur_probs(rho: &DensityMatrix, t: usize) -> Result<SwDistribution> {
    let omegas = vec![rho.matrix(); t];
    let table = weak_schur_probs_product(&omegas)?;
    Ok(SwDistribution {
        t,
        d: rho.dim(),
        spectrum: rho.spectrum(),
        table,
    })
}

/// One Keyl outcome on `ρ^{⊗t}`.
pub fn sample_keyl<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    t: usize,
    rng: &mut R,
    cfg: &KeylConfig,
) -> Result<KeylOutcome> {
    let omegas = vec![rho.matrix(); t];
    sample_keyl_product(&omegas, rng, cfg)
}

/// One Keyl outcome on the product state `ω_0 ⊗ … ⊗ ω_{t-1}`.
pub fn sample_keyl_product<R: Rng + ?Sized>(
    omegas: &[&CMatrix],
    rng: &mut R,
    cfg: &KeylConfig,
) -> Result<KeylOutcome> {
    let (sys, q) = system_and_probs(omegas)?;
    let total: f64 = q.iter().sum();
    if !(total > 0.0) {
        return domain("product state has zero trace");
    }
    let b = draw_index(&q, rng);
    let block = &sys.blocks[b];
    sample_unitary_given_block(block, omegas, rng, cfg)
}

/// Draws `U` from the conditional law given the block `λ`.
pub fn sample_unitary_given_block<R: Rng + ?Sized>(
    block: &SchurBlock,
    omegas: &[&CMatrix],
    rng: &mut R,
    cfg: &KeylConfig,
) -> Result<KeylOutcome> {
    let d = block.d;
    let envelope = block.dim_sp as f64
        * omegas
            .iter()
            .map(|w| HermitianEigen::new(w).values[0].max(0.0))
            .product::<f64>();
    if !(envelope > 0.0) {
        return domain("envelope vanishes; the state has no support");
    }
    for trial in 1..=cfg.max_trials {
        let u = haar_unitary(d, rng);
        let s = keyl_density(block, &u, omegas);
        if rng.random::<f64>() * envelope < s {
            return Ok(KeylOutcome::new(block.lam.clone(), u, trial, SamplerMode::Rejection));
        }
    }
    // Independence Metropolis fallback.
    let steps = cfg.chain_length.max(cfg.burn_in + 1);
    let mut current = None;
    for _ in 0..steps {
        let u = haar_unitary(d, rng);
        let s = keyl_density(block, &u, omegas);
        if s > 0.0 {
            current = Some((u, s));
            break;
        }
    }
    let Some((mut u, mut s)) = current else {
        return Err(Error::SamplerBudget {
            lambda: block.lam.parts().to_vec(),
            trials: cfg.max_trials,
            chain_steps: steps,
        });
    };
    for _ in 0..steps {
        let v = haar_unitary(d, rng);
        let sv = keyl_density(block, &v, omegas);
        if rng.random::<f64>() * s < sv {
            u = v;
            s = sv;
        }
    }
    Ok(KeylOutcome::new(
        block.lam.clone(),
        u,
        cfg.max_trials + steps,
        SamplerMode::Metropolis,
    ))
}

/// Refines a Keyl outcome to a rank-one outcome `x = U^{⊗t} v_j`, drawing
/// `j` by its Born weight on the product state.
pub fn refine_rank_one<R: Rng + ?Sized>(
    outcome: &KeylOutcome,
    omegas: &[&CMatrix],
    rng: &mut R,
) -> Result<PureVector> {
    let d = outcome.u.nrows();
    let sys = schur_system(d, omegas.len())?;
    let block = sys
        .block(&outcome.lam)
        .ok_or_else(|| Error::Domain(format!("no block for {}", outcome.lam)))?;
    let rotated: Vec<CMatrix> = omegas.iter().map(|w| outcome.u.adjoint() * *w * &outcome.u).collect();
    let ops: Vec<&CMatrix> = rotated.iter().collect();
    let basis = block.basis_vectors();
    let weights: Vec<f64> = basis
        .iter()
        .map(|v| product_expectation(&ops, v.amplitudes()).re.max(0.0))
        .collect();
    let j = draw_index(&weights, rng);
    Ok(basis[j].rotate(&outcome.u))
}

/// Streaming mean of `D` over `m` outcomes.
#[derive(Clone, Debug)]
pub struct BatchMeans {
    pub mean: CMatrix,
    pub records: Vec<KeylOutcome>,
    pub stats: SamplerStats,
}

pub fn keyl_batch_means<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    t: usize,
    m: usize,
    rng: &mut R,
    cfg: &KeylConfig,
    keep_records: bool,
) -> Result<BatchMeans> {
    if m == 0 {
        return Err(Error::EmptyInput("need at least one batch"));
    }
    let d = rho.dim();
    let mut mean = CMatrix::zeros(d, d);
    let mut records = Vec::new();
    let mut stats = SamplerStats::default();
    for k in 0..m {
        let o = sample_keyl(rho, t, rng, cfg)?;
        stats.record(&o);
        // Welford-style running mean keeps the sum well scaled.
        mean += (&o.estimate - &mean).map(|z| z / c((k + 1) as f64));
        if keep_records {
            records.push(o);
        }
    }
    Ok(BatchMeans {
        mean,
        records,
        stats,
    })
}

/// One line of the outcome trace log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub batch_index: u64,
    pub lambda_parts: Vec<usize>,
    pub accept_trials: usize,
    pub sampler_mode: SamplerMode,
    pub seed_path: String,
}

impl TraceRecord {
    pub fn from_outcome(batch_index: u64, o: &KeylOutcome, seed_path: String) -> Self {
        Self {
            batch_index,
            lambda_parts: o.lam.parts().to_vec(),
            accept_trials: o.accept_trials,
            sampler_mode: o.mode,
            seed_path,
        }
    }
}

/// Writes one JSON object per line.
pub fn write_trace_jsonl<W: Write>(mut w: W, records: &[TraceRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
