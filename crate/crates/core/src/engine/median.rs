use crate::error::{Error, Result};
use crate::tensor::{c, frobenius, CMatrix};

const TOL: f64 = 1e-9;
const MAX_ITER: usize = 500;
const FLOOR: f64 = 1e-12;

/// Geometric median under the Frobenius norm (Weiszfeld iteration started
/// at the mean).
///
/// A data point is returned directly when it satisfies the strict
/// optimality condition `‖Σ_{i≠k} (p_k − p_i)/‖p_k − p_i‖‖ < 1`; distances
/// below `1e-12` are floored to keep the weights finite.
pub fn geometric_median(points: &[CMatrix]) -> Result<CMatrix> {
    let Some(first) = points.first() else {
        return Err(Error::EmptyInput("geometric median of no points"));
    };
    if points.iter().any(|p| p.shape() != first.shape()) {
        return Err(Error::Domain("points have different shapes".into()));
    }
    if points.len() == 1 {
        return Ok(first.clone());
    }
    for (k, pk) in points.iter().enumerate() {
        let mut pull = CMatrix::zeros(pk.nrows(), pk.ncols());
        let mut coincident = 0usize;
        for (i, pi) in points.iter().enumerate() {
            if i == k {
                continue;
            }
            let diff = pk - pi;
            let dist = frobenius(&diff);
            if dist < FLOOR {
                coincident += 1;
            } else {
                pull += diff / c(dist);
            }
        }
        if frobenius(&pull) < 1.0 + coincident as f64 - 1e-12 {
            return Ok(pk.clone());
        }
    }
    let n = points.len() as f64;
    let mut x = points.iter().fold(CMatrix::zeros(first.nrows(), first.ncols()), |a, p| a + p) / c(n);
    for _ in 0..MAX_ITER {
        let mut num = CMatrix::zeros(x.nrows(), x.ncols());
        let mut den = 0.0;
        for p in points {
            let w = 1.0 / frobenius(&(p - &x)).max(FLOOR);
            num += p * c(w);
            den += w;
        }
        let next = num / c(den);
        let step = frobenius(&(&next - &x));
        x = next;
        if step < TOL {
            break;
        }
    }
    Ok(x)
}
