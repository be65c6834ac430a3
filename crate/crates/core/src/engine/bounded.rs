use rand::RngCore;

use super::{bernoulli, learn_balanced_refined, ConditionedSource, MeasurableState, RefinedConfig, RotatedSource, SplitSource};
use crate::error::{Error, Result};
use crate::keyl::SamplerStats;
use crate::split::{make_split_spec, rec, SplitSpec};
use crate::tensor::{c, project_density, trace, CMatrix, DensityMatrix, HermitianEigen};

#[derive(Clone, Debug)]
pub struct BoundedOutput {
    pub state: DensityMatrix,
    pub spec: SplitSpec,
    /// Batch size actually used (at most `k²`).
    pub t_used: usize,
    pub sampler_stats: SamplerStats,
}

/// Learns `ρ` given a known reference `ρ'` close to it: rotate into the
/// eigenbasis of `ρ'`, split so every eigenvalue is at most `1/d`, learn the
/// split state with the refined estimator, then apply `Rec` and rotate back.
pub fn learn_bounded(
    source: &dyn MeasurableState,
    rho_prime: &DensityMatrix,
    t: usize,
    eps: f64,
    delta: f64,
    rng: &mut dyn RngCore,
    cfg: &RefinedConfig,
) -> Result<BoundedOutput> {
    let d = source.dim();
    if rho_prime.dim() != d {
        return Err(Error::Domain("reference state has the wrong dimension".into()));
    }
    let eig = HermitianEigen::new(rho_prime.matrix());
    let eigs: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let spec = make_split_spec(&eigs, d)?;
    let u = eig.vectors.clone();
    let rotated = RotatedSource::new(source, u.adjoint())?;
    let split_src = SplitSource::new(&rotated, spec.clone())?;
    let k = spec.k();
    let t_used = t.clamp(1, k * k);
    let out = learn_balanced_refined(&split_src, t_used, eps, delta, rng, cfg)?;
    let back = &u * rec(out.state.matrix(), &spec)? * u.adjoint();
    Ok(BoundedOutput {
        state: project_density(&back, None)?,
        spec,
        t_used,
        sampler_stats: out.sampler_stats,
    })
}

#[derive(Clone, Debug)]
pub struct ProjectorOutput {
    /// `β̂·Q ρ̃ Q†`, PSD and supported inside `P`.
    pub estimate: CMatrix,
    pub beta_hat: f64,
    pub beta_copies: usize,
    pub t_prime: usize,
    pub discarded_batches: u64,
    pub sampler_stats: SamplerStats,
}

/// Orthonormal basis of the range of a projector.
pub(crate) fn range_isometry(p: &CMatrix) -> CMatrix {
    let eig = HermitianEigen::new(p);
    let r = eig.values.iter().filter(|&&v| v > 0.5).count();
    eig.vectors.columns(0, r).into_owned()
}

/// Learns `PρP` by conditioning copies on the outcome `P` of `(P, I−P)`.
///
/// `c_bound` is the `C` in the requirement `‖Pρ'P‖ ≤ C/d`. `β = tr(PρP)` is estimated from `⌈ln(1/δ)/ε²⌉` binary measurements
/// (at least 100). The conditioned state is then learned with batch size
/// `t' = max(1, ⌊tβ̂/2⌋)` and accuracy `ε/β̂`, and the result is scaled by `β̂`.
#[allow(clippy::too_many_arguments)]
pub fn learn_projector(
    source: &dyn MeasurableState,
    rho_prime: &DensityMatrix,
    p: &CMatrix,
    t: usize,
    eps: f64,
    delta: f64,
    c_bound: f64,
    beta_copies: Option<usize>,
    rng: &mut dyn RngCore,
    cfg: &RefinedConfig,
) -> Result<ProjectorOutput> {
    let d = source.dim();
    if p.nrows() != d || !p.is_square() {
        return Err(Error::Domain("projector has the wrong size".into()));
    }
    let q = range_isometry(p);
    let r = q.ncols();
    if r == 0 {
        return Err(Error::Precondition("projector is zero".into()));
    }
    let sub = q.adjoint() * rho_prime.matrix() * &q;
    let sub_norm = HermitianEigen::new(&sub).values.first().copied().unwrap_or(0.0);
    if sub_norm > c_bound / d as f64 + 1e-9 {
        return Err(Error::Precondition(format!(
            "‖Pρ'P‖ = {sub_norm:.4} exceeds C/d = {:.4}",
            c_bound / d as f64
        )));
    }
    let n_beta = beta_copies
        .unwrap_or_else(|| ((1.0 / delta).ln() / (eps * eps)).ceil() as usize)
        .max(100);
    let mut hits = 0usize;
    for _ in 0..n_beta {
        let b = source
            .draw_batch(1, rng)?
            .ok_or_else(|| Error::Resource("source discarded a single copy".into()))?;
        let pr = trace(&(q.adjoint() * &b[0] * &q)).re;
        if bernoulli(pr, rng) {
            hits += 1;
        }
    }
    let beta_hat = hits as f64 / n_beta as f64;
    if beta_hat < 0.09 {
        return Err(Error::Precondition(format!(
            "estimated tr(PρP) = {beta_hat:.4} is below 0.09"
        )));
    }
    let t_prime = ((t as f64 * beta_hat / 2.0).floor() as usize).max(1);
    let eps_prime = eps / beta_hat;
    let cond = ConditionedSource::new(source, q.clone(), t)?;
    let (rho_tilde, stats) = if r == 1 {
        (CMatrix::identity(1, 1), SamplerStats::default())
    } else {
        let tr = trace(&sub).re;
        let sub_state = if tr > 1e-12 {
            project_density(&(sub / c(tr)), None)?
        } else {
            DensityMatrix::maximally_mixed(r)
        };
        let out = learn_bounded(&cond, &sub_state, t_prime, eps_prime, delta, rng, cfg)?;
        (out.state.into_matrix(), out.sampler_stats)
    };
    Ok(ProjectorOutput {
        estimate: &q * rho_tilde * q.adjoint() * c(beta_hat),
        beta_hat,
        beta_copies: n_beta,
        t_prime,
        discarded_batches: cond.discarded_batches(),
        sampler_stats: stats,
    })
}
