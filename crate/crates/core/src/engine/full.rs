use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{learn_projector, unentangled_baseline, CopyBudget, MeasurableState, MixtureSource, RefinedConfig};
use crate::error::{Error, Result};
use crate::keyl::SamplerStats;
use crate::tensor::{c, hermitize, trace, CMatrix, DensityMatrix, HermitianEigen};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullConfig {
    /// Multiplier `K` in the default baseline budget `K d³ ln(1/δ)/(√t ε²)`.
    pub k_const: f64,
    /// Baseline copies (overrides the default budget).
    pub n_baseline: Option<usize>,
    /// Copies used to estimate `tr(P_j σ P_j)` at each level.
    pub beta_copies: Option<usize>,
    /// Enforce `t ≤ slack·(√d/ε)^{0.2}`; `None` disables the check.
    pub t_limit_slack: Option<f64>,
    pub refined: RefinedConfig,
}

impl Default for FullConfig {
    fn default() -> Self {
        Self {
            k_const: 1.0,
            n_baseline: None,
            beta_copies: None,
            t_limit_slack: Some(2.0),
            refined: RefinedConfig::default(),
        }
    }
}

impl FullConfig {
    pub fn baseline_copies(&self, d: usize, t: usize, eps: f64, delta: f64) -> usize {
        self.n_baseline.unwrap_or_else(|| {
            let df = d as f64;
            (self.k_const * df.powi(3) * (1.0 / delta).ln().max(1.0) / ((t as f64).sqrt() * eps * eps))
                .ceil()
                .max(1.0) as usize
        })
    }
}

#[derive(Clone, Debug)]
pub struct LadderLevel {
    pub j: usize,
    /// Eigenvalues of `σ̂_0` at or below this value span `P_j`.
    pub threshold: f64,
    pub projector: CMatrix,
    pub rank: usize,
    pub estimate: CMatrix,
}

#[derive(Clone, Debug)]
pub struct ProjectorLadder {
    pub base_estimate: DensityMatrix,
    /// Columns are eigenvectors of `σ̂_0`, eigenvalues descending.
    pub unitary: CMatrix,
    pub eigenvalues: Vec<f64>,
    pub levels: Vec<LadderLevel>,
}

impl ProjectorLadder {
    /// `Σ_j (P_j σ̂_j P_j − P_{j+1} σ̂_j P_{j+1})` with `P_0 = I` and a
    /// trailing zero projector.
    pub fn aggregate(&self) -> CMatrix {
        let d = self.base_estimate.dim();
        let mut projs: Vec<CMatrix> = vec![CMatrix::identity(d, d)];
        let mut ests: Vec<CMatrix> = vec![self.base_estimate.matrix().clone()];
        for l in &self.levels {
            projs.push(l.projector.clone());
            ests.push(l.estimate.clone());
        }
        projs.push(CMatrix::zeros(d, d));
        let mut out = CMatrix::zeros(d, d);
        for (j, est) in ests.iter().enumerate() {
            out += &projs[j] * est * &projs[j] - &projs[j + 1] * est * &projs[j + 1];
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct FullOutput {
    pub state: DensityMatrix,
    pub budget: CopyBudget,
    /// Set when a stage failed and the output fell back to the baseline.
    pub warning: Option<String>,
    pub ladder: ProjectorLadder,
    pub sampler_stats: SamplerStats,
}

/// Zeroes negative eigenvalues and rescales to unit trace.
fn trunc_normalize(m: &CMatrix) -> Result<DensityMatrix> {
    let eig = HermitianEigen::new(&hermitize(m));
    let pos = eig.map_spectrum(|v| v.max(0.0));
    let tr = trace(&pos).re;
    if !(tr > 1e-300) {
        return Err(Error::Infeasible("no positive eigenvalues left after truncation".into()));
    }
    Ok(DensityMatrix::new_unchecked(hermitize(&(pos / c(tr)))))
}

fn recentre(sigma_hat: &CMatrix) -> Result<DensityMatrix> {
    let d = sigma_hat.nrows();
    trunc_normalize(&(sigma_hat * c(2.0) - CMatrix::identity(d, d) / c(d as f64)))
}

/// Number of ladder levels, `⌊log₂ √t⌋`.
pub fn ladder_depth(t: usize) -> usize {
    let mut l = 0;
    while 1usize << (2 * (l + 1)) <= t {
        l += 1;
    }
    l
}

/// Full tomography for an arbitrary state.
///
/// Works on `σ = (ρ + I/d)/2`, whose eigenvalues are at least `1/(2d)`.
/// A single-copy estimate `σ̂_0` fixes an eigenbasis; level `j` relearns
/// the block where `σ̂_0 ≤ √t/(2^{j−1}d)` with the conditioned estimator.
/// The blocks are glued together and mapped back through `ρ = 2σ − I/d`.
pub fn full_learn(
    source: &dyn MeasurableState,
    t: usize,
    eps: f64,
    delta: f64,
    rng: &mut dyn RngCore,
    cfg: &FullConfig,
) -> Result<FullOutput> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("need ε > 0 and 0 < δ < 1, got {eps}, {delta}")));
    }
    let d = source.dim();
    if t == 0 || t > d * d {
        return Err(Error::Precondition(format!("batch size {t} not in 1..=d² = {}", d * d)));
    }
    if let Some(slack) = cfg.t_limit_slack {
        let limit = slack * ((d as f64).sqrt() / eps).powf(0.2);
        if t as f64 > limit {
            return Err(Error::Precondition(format!(
                "batch size {t} exceeds {slack}·(√d/ε)^0.2 = {limit:.3}"
            )));
        }
    }
    let mixed = DensityMatrix::maximally_mixed(d);
    let sigma_src = MixtureSource::new(source, &mixed, 0.5)?;
    let mut budget = CopyBudget::default();
    let mut mark = source.copies_consumed();
    let mut take = |label: String, budget: &mut CopyBudget| {
        let now = source.copies_consumed();
        budget.add(label, now - mark);
        mark = now;
    };

    let n = cfg.baseline_copies(d, t, eps, delta);
    let base = unentangled_baseline(&sigma_src, n, rng)?;
    take("baseline".into(), &mut budget);
    let sigma0 = base.state;
    let eig = HermitianEigen::new(sigma0.matrix());
    let u = eig.vectors.clone();
    let mut ladder = ProjectorLadder {
        base_estimate: sigma0.clone(),
        unitary: u.clone(),
        eigenvalues: eig.values.clone(),
        levels: Vec::new(),
    };
    let mut stats = SamplerStats::default();
    let depth = ladder_depth(t);
    let sqrt_t = (t as f64).sqrt();
    let eps_level = eps / (d as f64).sqrt();
    let mut failure = None;
    for j in 1..=depth {
        let scale = sqrt_t / (1u64 << (j - 1)) as f64;
        let threshold = scale / d as f64;
        let cols: Vec<usize> = (0..d).filter(|&k| eig.values[k] <= threshold).collect();
        let mut p = CMatrix::zeros(d, d);
        for &k in &cols {
            let v = u.column(k);
            p += v * v.adjoint();
        }
        let estimate = if cols.is_empty() {
            CMatrix::zeros(d, d)
        } else {
            match learn_projector(
                &sigma_src,
                &sigma0,
                &p,
                t,
                eps_level,
                delta,
                scale,
                cfg.beta_copies,
                rng,
                &cfg.refined,
            ) {
                Ok(out) => {
                    stats.merge(&out.sampler_stats);
                    out.estimate
                }
                Err(e) => {
                    failure = Some(format!("level {j}: {e}"));
                    take(format!("level {j}"), &mut budget);
                    break;
                }
            }
        };
        take(format!("level {j}"), &mut budget);
        ladder.levels.push(LadderLevel {
            j,
            threshold,
            projector: p,
            rank: cols.len(),
            estimate,
        });
    }

    let (state, warning) = match failure {
        None => match recentre(&ladder.aggregate()) {
            Ok(s) => (s, None),
            Err(e) => (recentre(sigma0.matrix())?, Some(format!("aggregation: {e}"))),
        },
        Some(w) => (recentre(sigma0.matrix())?, Some(w)),
    };
    Ok(FullOutput {
        state,
        budget,
        warning,
        ladder,
        sampler_stats: stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_is_floor_log2_sqrt() {
        let want = [(1, 0), (2, 0), (3, 0), (4, 1), (8, 1), (15, 1), (16, 2), (63, 2), (64, 3)];
        for (t, l) in want {
            assert_eq!(ladder_depth(t), l, "t = {t}");
        }
    }
}
