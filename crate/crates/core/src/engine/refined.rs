use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{geometric_median, learn_balanced, unentangled_baseline, BalancedConfig, MeasurableState, MixtureSource};
use crate::error::{Error, Result};
use crate::keyl::SamplerStats;
use crate::tensor::{c, project_density, CMatrix, DensityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinedConfig {
    /// Multiplier `K` in the default budgets `n_base = K d²/(√t ε²)` and
    /// `m = K d²/(t^{1.5} ε²)`.
    pub k_const: f64,
    /// Constant `c` in the batch-size condition `t ≤ c·(1/ε)^{0.2}`.
    pub c_const: f64,
    /// Reject batch sizes above `c·(1/ε)^{0.2}` instead of only recording them.
    pub enforce_t_limit: bool,
    /// Baseline copies per repeat (overrides the default budget).
    pub n_base: Option<usize>,
    /// Keyl batches per repeat (overrides the default budget).
    pub m_batches: Option<usize>,
    /// Number of repeats aggregated by the geometric median (default `⌈ln(1/δ)⌉`).
    pub repeats: Option<usize>,
    pub balanced: BalancedConfig,
}

impl Default for RefinedConfig {
    fn default() -> Self {
        Self {
            k_const: 1.0,
            c_const: 1.0,
            enforce_t_limit: false,
            n_base: None,
            m_batches: None,
            repeats: None,
            balanced: BalancedConfig::default(),
        }
    }
}

impl RefinedConfig {
    pub fn baseline_copies(&self, d: usize, t: usize, eps: f64) -> usize {
        self.n_base.unwrap_or_else(|| {
            (self.k_const * (d * d) as f64 / ((t as f64).sqrt() * eps * eps)).ceil().max(1.0) as usize
        })
    }

    pub fn batches(&self, d: usize, t: usize, eps: f64) -> usize {
        self.m_batches.unwrap_or_else(|| {
            (self.k_const * (d * d) as f64 / ((t as f64).powf(1.5) * eps * eps)).ceil().max(1.0) as usize
        })
    }

    pub fn repeat_count(&self, delta: f64) -> usize {
        self.repeats
            .unwrap_or_else(|| (1.0 / delta).ln().ceil().max(1.0) as usize)
            .max(1)
    }
}

#[derive(Clone, Debug)]
pub struct RefinedOutput {
    pub state: DensityMatrix,
    /// Per-repeat outputs before the median.
    pub candidates: Vec<DensityMatrix>,
    pub sampler_stats: SamplerStats,
    /// Whether `t` exceeded `c·(1/ε)^{0.2}`.
    pub t_limit_exceeded: bool,
    pub discarded: u64,
}

/// Two-stage refinement around a crude single-copy estimate.
///
/// Stage one learns `ρ̃` with single-copy measurements and projects it to
/// states with `‖ρ̃‖ ≤ 4/d`. Stage two runs the balanced estimator on
/// `(ρ + 3σ)/4` with `σ = 4I/(3d) − ρ̃/3`, which equals `I/d + (ρ − ρ̃)/4`,
/// and outputs the projection of `ρ̃ + 4Ê`. Repeats are combined by their
/// geometric median.
pub fn learn_balanced_refined(
    source: &dyn MeasurableState,
    t: usize,
    eps: f64,
    delta: f64,
    rng: &mut dyn RngCore,
    cfg: &RefinedConfig,
) -> Result<RefinedOutput> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("need ε > 0 and 0 < δ < 1, got {eps}, {delta}")));
    }
    let d = source.dim();
    if t == 0 || t > d * d {
        return Err(Error::Precondition(format!("batch size {t} not in 1..=d² = {}", d * d)));
    }
    let limit = cfg.c_const * (1.0 / eps).powf(0.2);
    let t_limit_exceeded = t as f64 > limit;
    if t_limit_exceeded && cfg.enforce_t_limit {
        return Err(Error::Precondition(format!(
            "batch size {t} exceeds c·(1/ε)^0.2 = {limit:.3}"
        )));
    }
    let n_base = cfg.baseline_copies(d, t, eps);
    let m = cfg.batches(d, t, eps);
    let reps = cfg.repeat_count(delta);
    let cap = 4.0 / d as f64;
    let id = CMatrix::identity(d, d);
    let mut candidates = Vec::with_capacity(reps);
    let mut stats = SamplerStats::default();
    let mut discarded = 0;
    for _ in 0..reps {
        let base = unentangled_baseline(source, n_base, rng)?;
        discarded += base.discarded;
        let rho_tilde = project_density(&base.raw, Some(cap))?;
        let sigma = DensityMatrix::new_unchecked(crate::tensor::hermitize(
            &(&id * c(4.0 / (3.0 * d as f64)) - rho_tilde.matrix() / c(3.0)),
        ));
        let mix = MixtureSource::new(source, &sigma, 0.25)?;
        let est = learn_balanced(&mix, t, m, rng, &cfg.balanced)?;
        stats.merge(&est.sampler_stats);
        discarded += est.discarded;
        let candidate = rho_tilde.matrix() + est.e_hat.matrix() * c(4.0);
        candidates.push(project_density(&candidate, None)?);
    }
    let pts: Vec<CMatrix> = candidates.iter().map(|s| s.matrix().clone()).collect();
    let med = geometric_median(&pts)?;
    Ok(RefinedOutput {
        state: project_density(&med, None)?,
        candidates,
        sampler_stats: stats,
        t_limit_exceeded,
        discarded,
    })
}
