use super::{CMatrix, DensityMatrix, HermitianEigen};
use crate::error::{domain, Error, Result};

/// Euclidean projection of `values` onto `{x : 0 ≤ x_i ≤ cap, Σ x_i = 1}`.
///
/// The solution is `x_i = clamp(v_i − τ, 0, cap)` for the unique shift `τ`
/// making the sum one; `τ` is found by bisection.
pub(crate) fn project_capped_simplex(values: &[f64], cap: f64) -> Vec<f64> {
    let total = |tau: f64| -> f64 { values.iter().map(|v| (v - tau).clamp(0.0, cap)).sum() };
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    // total(lo) ≥ 1 and total(hi) = 0 bracket the root.
    let mut lo = min - 1.0;
    let mut hi = max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + hi.abs()) {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut x: Vec<f64> = values.iter().map(|v| (v - tau).clamp(0.0, cap)).collect();
    // Remove the residual bisection error from the free coordinates.
    let free: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0 && x[i] < cap).collect();
    let s: f64 = x.iter().sum();
    if !free.is_empty() {
        let shift = (1.0 - s) / free.len() as f64;
        for &i in &free {
            x[i] = (x[i] + shift).clamp(0.0, cap);
        }
    }
    x
}

/// Frobenius-nearest density matrix with operator norm at most `op_cap`.
pub fn project_density(m: &CMatrix, op_cap: Option<f64>) -> Result<DensityMatrix> {
    if !m.is_square() || m.nrows() == 0 {
        return domain("projection needs a nonempty square matrix");
    }
    let d = m.nrows();
    let cap = op_cap.unwrap_or(f64::INFINITY);
    if !(cap * d as f64 >= 1.0) {
        return Err(Error::Infeasible(format!(
            "no {d}-dimensional state has operator norm at most {cap}"
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return domain("non-finite entry in projection input");
    }
    let eig = HermitianEigen::new(m);
    let x = project_capped_simplex(&eig.values, cap.min(1.0));
    Ok(DensityMatrix::new_unchecked(super::hermitize(&eig.rebuild(&x))))
}

/// Schatten norms of a difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub trace_norm: f64,
    pub frobenius: f64,
    pub operator: f64,
}

/// Trace, Frobenius and operator norms of `A − B`.
pub fn norms_and_distances(a: &CMatrix, b: &CMatrix) -> Result<Norms> {
    if a.shape() != b.shape() {
        return domain("norms need matrices of equal shape");
    }
    let diff = a - b;
    let sv = diff.singular_values();
    Ok(Norms {
        trace_norm: sv.iter().sum(),
        frobenius: sv.iter().map(|s| s * s).sum::<f64>().sqrt(),
        operator: sv.iter().copied().fold(0.0, f64::max),
    })
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let diff = a.matrix() - b.matrix();
    0.5 * HermitianEigen::new(&diff).values.iter().map(|v| v.abs()).sum::<f64>()
}
