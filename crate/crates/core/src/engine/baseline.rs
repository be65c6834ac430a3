use rand::RngCore;

use super::{draw_kept, MeasurableState, MAX_DISCARDS};
use crate::error::{Error, Result};
use crate::partition::draw_index;
use crate::tensor::{haar_unitary, project_density, CMatrix, DensityMatrix};

/// Output of the single-copy baseline.
#[derive(Clone, Debug)]
pub struct BaselineEstimate {
    /// Mean of the per-copy estimators (unbiased, not necessarily PSD).
    pub raw: CMatrix,
    /// `raw` projected onto density matrices.
    pub state: DensityMatrix,
    pub copies: usize,
    pub discarded: u64,
}

/// Measures `ω` in a Haar-random basis and returns `(d+1)vv† − I` for the
/// observed basis vector `v`.
pub fn single_copy_estimate(omega: &CMatrix, rng: &mut dyn RngCore) -> CMatrix {
    let d = omega.nrows();
    let u = haar_unitary(d, rng);
    let probs: Vec<f64> = (0..d)
        .map(|k| {
            let col = u.column(k);
            (col.adjoint() * omega * col)[(0, 0)].re.max(0.0)
        })
        .collect();
    let k = draw_index(&probs, rng);
    let v = u.column(k);
    (v * v.adjoint()) * crate::tensor::c((d + 1) as f64) - CMatrix::identity(d, d)
}

/// Single-copy tomography on `n` copies with Haar-random bases.
pub fn unentangled_baseline(
    source: &dyn MeasurableState,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<BaselineEstimate> {
    if n == 0 {
        return Err(Error::EmptyInput("baseline needs at least one copy"));
    }
    let d = source.dim();
    let mut sum = CMatrix::zeros(d, d);
    let mut discarded = 0;
    for _ in 0..n {
        let batch = draw_kept(source, 1, rng, &mut discarded, MAX_DISCARDS)?;
        sum += single_copy_estimate(&batch[0], rng);
    }
    let raw = sum / crate::tensor::c(n as f64);
    let state = project_density(&raw, None)?;
    Ok(BaselineEstimate {
        raw,
        state,
        copies: n,
        discarded,
    })
}
