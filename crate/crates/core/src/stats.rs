//! Goodness-of-fit helpers used by the verification suites.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of `observed` counts against `probs`.
///
/// Cells with expected count below 5 are pooled into one cell before the
/// statistic is formed. Cells with zero probability must have zero counts.
pub fn chi_square_test(observed: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != probs.len() || observed.is_empty() {
        return domain("observed and expected must be nonempty and of equal length");
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return domain("no observations");
    }
    let total_p: f64 = probs.iter().sum();
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut pooled = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let p = p / total_p;
        if p <= 0.0 {
            if o > 0 {
                return Ok(ChiSquareResult {
                    statistic: f64::INFINITY,
                    dof: 0,
                    p_value: 0.0,
                });
            }
            continue;
        }
        let e = p * nf;
        if e < 5.0 {
            pooled.0 += o as f64;
            pooled.1 += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled.1 > 0.0 {
        cells.push(pooled);
    }
    if cells.len() < 2 {
        return Ok(ChiSquareResult {
            statistic: 0.0,
            dof: 0,
            p_value: 1.0,
        });
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| crate::Error::Domain(e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// Effective size of the weighted sample, `(Σw)²/Σw²`.
    pub effective_n: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test of an unweighted sample against a
/// weighted one (an importance-reweighted reference).
pub fn weighted_ks_test(sample: &[f64], reference: &[f64], weights: &[f64]) -> Result<KsResult> {
    if sample.is_empty() || reference.is_empty() || reference.len() != weights.len() {
        return domain("KS test needs nonempty samples and one weight per reference point");
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return domain("weights must be nonnegative");
    }
    let wsum: f64 = weights.iter().sum();
    if wsum <= 0.0 {
        return domain("weights sum to zero");
    }
    let mut a: Vec<f64> = sample.to_vec();
    a.sort_by(f64::total_cmp);
    let mut b: Vec<(f64, f64)> = reference
        .iter()
        .zip(weights)
        .map(|(&x, &w)| (x, w / wsum))
        .collect();
    b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let na = a.len() as f64;
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut stat = 0.0f64;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&(v, _))) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&(v, _))) => v,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= x {
            fa += 1.0 / na;
            i += 1;
        }
        while j < b.len() && b[j].0 <= x {
            fb += b[j].1;
            j += 1;
        }
        stat = stat.max((fa - fb).abs());
    }
    let w2: f64 = weights.iter().map(|w| (w / wsum).powi(2)).sum();
    let nb = 1.0 / w2;
    let en = (na * nb / (na + nb)).sqrt();
    Ok(KsResult {
        statistic: stat,
        effective_n: nb,
        p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * stat),
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
