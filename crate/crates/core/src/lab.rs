//! Numerical checks of the linearization and lower-bound quantities.
//!
//! Every check returns a [`DiagnosticReport`] carrying both sides of the
//! inequality and the ratio between them, so loose constants show up as
//! margins instead of hard failures.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::keyl::{refine_rank_one, sample_keyl, KeylConfig};
use crate::partition::{dim_ssyt, enumerate_partitions, factorial, sample_sw, schur_poly, Partition};
use crate::stats::mean_stderr;
use crate::schur::{character, cycle_type, permutation_action, permutations, schur_system};
use crate::tensor::{
    c, checked_pow, g_matrix, haar_unitary, haar_vector, kron_all, product_expectation, CMatrix, DensityMatrix,
    Deviation, HermitianEigen, PureVector, C64,
};

/// Largest `d^t` for which dense `d^t × d^t` matrices are built.
pub const MAX_DENSE_DIM: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub check_name: String,
    pub lhs: f64,
    pub rhs_bound: f64,
    pub stderr: f64,
    /// `lhs / rhs_bound` for upper bounds, `rhs_bound / lhs` for lower bounds.
    /// Values below one mean the inequality holds with room to spare.
    pub margin_ratio: f64,
    pub pass: bool,
}

impl DiagnosticReport {
    fn upper(name: &str, lhs: f64, bound: f64, stderr: f64) -> Self {
        Self {
            check_name: name.to_string(),
            lhs,
            rhs_bound: bound,
            stderr,
            margin_ratio: ratio(lhs, bound),
            pass: lhs <= bound + 5.0 * stderr,
        }
    }

    fn lower(name: &str, lhs: f64, bound: f64, stderr: f64) -> Self {
        Self {
            check_name: name.to_string(),
            lhs,
            rhs_bound: bound,
            stderr,
            margin_ratio: ratio(bound, lhs),
            pass: lhs >= bound - 5.0 * stderr,
        }
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else if a <= 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn dense_dim(d: usize, t: usize) -> Result<usize> {
    match checked_pow(d, t) {
        Some(n) if n <= MAX_DENSE_DIM => Ok(n),
        _ => domain(format!("d^t for d = {d}, t = {t} exceeds {MAX_DENSE_DIM}")),
    }
}

/// First-order expansion of `ρ^{⊗t}` around `(I/d)^{⊗t}`:
/// `X' = (I/d)^{⊗t} + Σ_k (I/d)^{⊗k} ⊗ E ⊗ (I/d)^{⊗(t−k−1)}` with `E = ρ − I/d`.
pub fn linearize(rho: &DensityMatrix, t: usize) -> Result<CMatrix> {
    if t == 0 {
        return Err(Error::EmptyInput("t must be positive"));
    }
    let d = rho.dim();
    dense_dim(d, t)?;
    if t == 1 {
        return Ok(rho.matrix().clone());
    }
    let mixed = CMatrix::identity(d, d) / c(d as f64);
    let e = rho.deviation_from_mixed();
    let mut out = kron_all(&vec![&mixed; t]);
    for k in 0..t {
        let mut ops = vec![&mixed; t];
        ops[k] = e.matrix();
        out += kron_all(&ops);
    }
    Ok(out)
}

/// `‖Π_λ v‖²` for every `λ ⊢ t` with at most `d` rows, via
/// `(dim λ / t!) Σ_π χ_λ(π) ⟨v, P_π v⟩`.
pub fn isotypic_weights(v: &PureVector) -> Result<Vec<(Partition, f64)>> {
    let d = v.local_dim();
    let t = v.order();
    let amps = v.amplitudes();
    let perms = permutations(t);
    let overlaps: Vec<f64> = perms
        .iter()
        .map(|pi| {
            permutation_action(pi, d)
                .iter()
                .enumerate()
                .map(|(b, &a)| amps[a].conj() * amps[b])
                .sum::<C64>()
                .re
        })
        .collect();
    let types: Vec<Partition> = perms.iter().map(|p| cycle_type(p)).collect();
    let tf = factorial(t) as f64;
    let mut out = Vec::new();
    for lam in enumerate_partitions(t, d)? {
        let mut s = 0.0;
        let mut memo: Vec<(Partition, i64)> = Vec::new();
        for (ty, ov) in types.iter().zip(&overlaps) {
            let chi = match memo.iter().find(|(p, _)| p == ty) {
                Some((_, x)) => *x,
                None => {
                    let x = character(&lam, ty)?;
                    memo.push((ty.clone(), x));
                    x
                }
            };
            s += chi as f64 * ov;
        }
        let w = crate::partition::dim_syt(&lam) as f64 * s / tf;
        out.push((lam, w.max(0.0)));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationAverage {
    pub report: DiagnosticReport,
    /// Monte-Carlo estimate of `E_U⟨(UEU†)^{⊗t}, vv†⟩` (signed).
    pub empirical: f64,
    /// Closed form `Σ_λ s_λ(eig E)·‖Π_λ v‖² / dim V_λ`.
    pub exact: f64,
}

/// Checks `|E_U⟨(UEU†)^{⊗t}, vv†⟩| ≤ (4t)^{4t}‖E‖_F^t / d^t` for one unit
/// vector `v` by averaging over `n` Haar unitaries.
pub fn rotation_average_check<R: Rng + ?Sized>(
    e: &Deviation,
    v: &PureVector,
    n: usize,
    rng: &mut R,
) -> Result<RotationAverage> {
    let d = e.dim();
    let t = v.order();
    if t < 2 {
        return domain("rotation average needs t ≥ 2");
    }
    if v.local_dim() != d || !v.is_normalized() {
        return domain("v must be a unit vector in (C^d)^{⊗t}");
    }
    if n < 2 {
        return domain("need at least two rotations");
    }
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let u = haar_unitary(d, rng);
        let rot = &u * e.matrix() * u.adjoint();
        let ops = vec![&rot; t];
        samples.push(product_expectation(&ops, v.amplitudes()).re);
    }
    let (mean, se) = mean_stderr(&samples);
    let eig = HermitianEigen::new(e.matrix()).values;
    let exact = isotypic_weights(v)?
        .iter()
        .map(|(lam, w)| schur_poly(lam, &eig) * w / dim_ssyt(lam, d) as f64)
        .sum();
    let bound = (4.0 * t as f64).powf(4.0 * t as f64) * e.frobenius().powi(t as i32) / (d as f64).powi(t as i32);
    Ok(RotationAverage {
        report: DiagnosticReport::upper("rotation_average", mean.abs(), bound, se),
        empirical: mean,
        exact,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationChi2 {
    pub report: DiagnosticReport,
    /// Whether `‖E‖_F ≤ (0.01/t)^4`, the regime where the bound is proven.
    pub precondition_met: bool,
    pub samples: usize,
}

/// `Σ_{|S| ≥ 2} b†(⊗_k A_k)b` with `A_k = E` on `S` and `I/d` elsewhere,
/// which is `⟨ρ^{⊗t} − X', bb†⟩` without the cancellation.
fn higher_order_overlap(e: &CMatrix, t: usize, b: &[C64]) -> f64 {
    let d = e.nrows();
    let mixed = CMatrix::identity(d, d) / c(d as f64);
    let mut total = 0.0;
    for mask in 0u32..(1 << t) {
        if mask.count_ones() < 2 {
            continue;
        }
        let ops: Vec<&CMatrix> = (0..t).map(|k| if mask >> k & 1 == 1 { e } else { &mixed }).collect();
        total += product_expectation(&ops, b).re;
    }
    total
}

/// Monte-Carlo value of `∫ d^t⟨X − X', M_z⟩² / tr(M_z) dz` over Keyl's POVM
/// with `X = ρ^{⊗t}`, compared against `(100t)^4‖E‖_F^4`.
///
/// Outcomes are drawn from the law under `I/d` (`λ ∼ SW`, `U` Haar), which
/// has density `tr(M_z)/d^t`, so each sample contributes
/// `d^{2t}⟨X − X', U M_λ U†⟩² / dim(λ)²`.
pub fn linearization_chi2<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    t: usize,
    n: usize,
    rng: &mut R,
) -> Result<LinearizationChi2> {
    let d = rho.dim();
    if t == 0 || n < 2 {
        return domain("need t ≥ 1 and at least two samples");
    }
    let sys = schur_system(d, t)?;
    let e = rho.deviation_from_mixed();
    let uniform = vec![1.0 / d as f64; d];
    let dt = (d as f64).powi(t as i32);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let lam = sample_sw(t, &uniform, rng)?;
        let block = sys
            .block(&lam)
            .ok_or_else(|| Error::Domain(format!("no block for {lam}")))?;
        let u = haar_unitary(d, rng);
        // ⟨Δ, U M U†⟩ = ⟨Δ_U, M⟩ with every copy of E rotated to U†EU.
        let e_rot = u.adjoint() * e.matrix() * &u;
        let overlap: f64 = block
            .complex_basis()
            .iter()
            .map(|b| higher_order_overlap(&e_rot, t, b))
            .sum();
        let k = block.dim_sp as f64;
        samples.push(dt * dt * overlap * overlap / (k * k));
    }
    let (mean, se) = mean_stderr(&samples);
    let ef = e.frobenius();
    let bound = (100.0 * t as f64).powi(4) * ef.powi(4);
    Ok(LinearizationChi2 {
        report: DiagnosticReport::upper("linearization_chi2", mean, bound, se),
        precondition_met: ef <= (0.01 / t as f64).powi(4),
        samples: n,
    })
}

/// `‖G_1(v)‖_F² ≤ Σ_λ ‖Π_λ v‖²·Σλ_i²`.
pub fn skewness_check(v: &PureVector) -> Result<DiagnosticReport> {
    if !v.is_normalized() {
        return domain("skewness check needs a unit vector");
    }
    let g = g_matrix(v, 1)?;
    let lhs = g.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let rhs = isotypic_weights(v)?
        .iter()
        .map(|(lam, w)| w * lam.sum_squares() as f64)
        .sum::<f64>();
    Ok(DiagnosticReport {
        check_name: "skewness".into(),
        lhs,
        rhs_bound: rhs,
        stderr: 0.0,
        margin_ratio: ratio(lhs, rhs),
        pass: lhs <= rhs + 1e-8,
    })
}

/// A sequence of rank-one outcomes `x_j` with POVM weights `ω_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub outcomes: Vec<PureVector>,
    pub weights: Vec<f64>,
    pub povm_ids: Vec<String>,
    pub state_label: String,
}

impl TranscriptRecord {
    pub fn new(outcomes: Vec<PureVector>, weights: Vec<f64>, povm_ids: Vec<String>, state_label: impl Into<String>) -> Result<Self> {
        if outcomes.len() != weights.len() || outcomes.len() != povm_ids.len() {
            return domain("transcript fields have different lengths");
        }
        if let Some(j) = outcomes.iter().position(|x| (x.norm() - 1.0).abs() > 1e-10) {
            return domain(format!("outcome {j} is not a unit vector"));
        }
        if outcomes.windows(2).any(|w| w[0].local_dim() != w[1].local_dim() || w[0].order() != w[1].order()) {
            return domain("outcomes live in different spaces");
        }
        Ok(Self {
            outcomes,
            weights,
            povm_ids,
            state_label: state_label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Measures `m` batches of `ρ^{⊗t}` with Keyl's POVM refined to rank one.
/// The weight of each outcome is `dim V_λ`, the scale of its POVM element.
pub fn keyl_transcript<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    t: usize,
    m: usize,
    label: &str,
    rng: &mut R,
    cfg: &KeylConfig,
) -> Result<TranscriptRecord> {
    let d = rho.dim();
    let omegas = vec![rho.matrix(); t];
    let mut outcomes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    let mut ids = Vec::with_capacity(m);
    for j in 0..m {
        let o = sample_keyl(rho, t, rng, cfg)?;
        weights.push(dim_ssyt(&o.lam, d) as f64);
        outcomes.push(refine_rank_one(&o, &omegas, rng)?);
        ids.push(format!("keyl:{j}"));
    }
    TranscriptRecord::new(outcomes, weights, ids, label)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellBalancedStats {
    pub a_stat: f64,
    pub b_stat: f64,
    /// Per-outcome summands of `a_stat`.
    pub a_terms: Vec<f64>,
    pub m: usize,
    pub t: usize,
    pub d: usize,
}

fn power_overlap(rho: &CMatrix, x: &PureVector) -> f64 {
    let ops = vec![rho; x.order()];
    product_expectation(&ops, x.amplitudes()).re
}

/// `A = Σ_j Σ_λ ‖Π_λ x_j‖²·Σλ_i² / (d^t x_j†ρ₀^{⊗t}x_j)` and
/// `B = ‖−binom(t,2)·m·I + d^{−(t−2)} Σ_j G_2(x_j)/(x_j†ρ₀^{⊗t}x_j)‖_op`.
pub fn well_balanced_stats(transcript: &TranscriptRecord, rho0: &DensityMatrix, t: usize) -> Result<WellBalancedStats> {
    let d = rho0.dim();
    let m = transcript.len();
    if let Some(x) = transcript.outcomes.first() {
        if x.local_dim() != d || x.order() != t {
            return domain("transcript does not match (d, t)");
        }
    }
    let dt = (d as f64).powi(t as i32);
    let mut a_terms = Vec::with_capacity(m);
    let g_dim = if t >= 2 { d * d } else { 0 };
    let mut g_sum = CMatrix::zeros(g_dim, g_dim);
    for (j, x) in transcript.outcomes.iter().enumerate() {
        let den = power_overlap(rho0.matrix(), x);
        if !(den > 0.0) {
            return domain(format!("outcome {j} has zero probability under ρ₀"));
        }
        let num: f64 = isotypic_weights(x)?
            .iter()
            .map(|(lam, w)| w * lam.sum_squares() as f64)
            .sum();
        a_terms.push(num / (dt * den));
        if t >= 2 {
            g_sum += g_matrix(x, 2)? / c(den);
        }
    }
    let b_stat = if t >= 2 {
        let pairs = (t * (t - 1) / 2) as f64;
        let scaled = g_sum / c((d as f64).powi(t as i32 - 2)) - CMatrix::identity(g_dim, g_dim) * c(pairs * m as f64);
        let vals = HermitianEigen::new(&scaled).values;
        vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    } else {
        0.0
    };
    Ok(WellBalancedStats {
        a_stat: a_terms.iter().sum(),
        b_stat,
        a_terms,
        m,
        t,
        d,
    })
}

/// `Σ_j [log(x_j†ρ^{⊗t}x_j) − log(x_j†ρ₀^{⊗t}x_j)]`.
pub fn likelihood_ratio_product(
    transcript: &TranscriptRecord,
    rho: &DensityMatrix,
    rho0: &DensityMatrix,
    t: usize,
) -> Result<f64> {
    if rho.dim() != rho0.dim() {
        return domain("states have different dimensions");
    }
    let mut total = 0.0;
    for (j, x) in transcript.outcomes.iter().enumerate() {
        if x.order() != t || x.local_dim() != rho.dim() {
            return domain("transcript does not match (d, t)");
        }
        let a = power_overlap(rho.matrix(), x);
        let b = power_overlap(rho0.matrix(), x);
        if !(a > 0.0 && b > 0.0) {
            return domain(format!("outcome {j} has zero probability; states must be full rank"));
        }
        total += a.ln() - b.ln();
    }
    Ok(total)
}

/// Averages `exp(likelihood_ratio_product)` over `n` alternatives
/// `ρ₀ + UΔU†` with Haar `U` and compares it with
/// `exp(−(2ε²A + 10^8ε²B)/d − 30mt³ε³/d)`.
pub fn avg_likelihood_check<R: Rng + ?Sized>(
    transcript: &TranscriptRecord,
    rho0: &DensityMatrix,
    delta: &Deviation,
    eps: f64,
    t: usize,
    n: usize,
    rng: &mut R,
) -> Result<DiagnosticReport> {
    let d = rho0.dim();
    if delta.dim() != d || n < 2 {
        return domain("Δ must match ρ₀ and n ≥ 2");
    }
    let stats = well_balanced_stats(transcript, rho0, t)?;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let u = haar_unitary(d, rng);
        let alt = DensityMatrix::new(rho0.matrix() + &u * delta.matrix() * u.adjoint())?;
        samples.push(likelihood_ratio_product(transcript, &alt, rho0, t)?.exp());
    }
    let (mean, se) = mean_stderr(&samples);
    let df = d as f64;
    let m = transcript.len() as f64;
    let exponent = -(2.0 * eps * eps * stats.a_stat + 1e8 * eps * eps * stats.b_stat) / df
        - 30.0 * m * (t as f64).powi(3) * eps.powi(3) / df;
    Ok(DiagnosticReport::lower("avg_likelihood_ratio", mean, exponent.exp(), se))
}

/// Runs [`skewness_check`] on `n` Haar-random unit vectors in `(C^d)^{⊗t}`.
pub fn skewness_sweep<R: Rng + ?Sized>(d: usize, t: usize, n: usize, rng: &mut R) -> Result<Vec<DiagnosticReport>> {
    let dim = checked_pow(d, t).ok_or_else(|| Error::Resource("d^t overflows".into()))?;
    (0..n)
        .map(|_| {
            let v = PureVector::new(d, t, haar_vector(dim, rng).as_slice().to_vec())?;
            skewness_check(&v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{diag, frobenius, kron_power};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linearize_small_cases() {
        let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
        assert_eq!(linearize(&rho, 1).unwrap(), *rho.matrix());
        let mixed = DensityMatrix::maximally_mixed(3);
        let x = linearize(&mixed, 2).unwrap();
        assert!(frobenius(&(x - kron_power(mixed.matrix(), 2))) < 1e-15);
        let h = diag(&[0.5, 0.5]);
        let e = diag(&[0.2, -0.2]);
        let want = kron_all(&[&h, &h]) + kron_all(&[&e, &h]) + kron_all(&[&h, &e]);
        assert!(frobenius(&(linearize(&rho, 2).unwrap() - want)) < 1e-15);
    }

    #[test]
    fn isotypic_weights_sum_to_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = PureVector::new(2, 3, haar_vector(8, &mut rng).as_slice().to_vec()).unwrap();
        let total: f64 = isotypic_weights(&v).unwrap().iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn skewness_equality_cases() {
        let v = PureVector::basis(2, &[0, 0, 0]).unwrap();
        let r = skewness_check(&v).unwrap();
        assert!((r.lhs - 9.0).abs() < 1e-12 && (r.rhs_bound - 9.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = PureVector::new(2, 2, vec![c(0.0), c(s), c(-s), c(0.0)]).unwrap();
        let r = skewness_check(&singlet).unwrap();
        assert!((r.lhs - 2.0).abs() < 1e-12 && (r.rhs_bound - 2.0).abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn empty_transcript_stats() {
        let tr = TranscriptRecord::new(vec![], vec![], vec![], "none").unwrap();
        let s = well_balanced_stats(&tr, &DensityMatrix::maximally_mixed(2), 2).unwrap();
        assert_eq!((s.a_stat, s.b_stat, s.m), (0.0, 0.0, 0));
    }

    #[test]
    fn likelihood_of_product_outcome() {
        let x = PureVector::basis(2, &[0, 0, 0]).unwrap();
        let tr = TranscriptRecord::new(vec![x], vec![1.0], vec!["e".into()], "basis").unwrap();
        let rho = DensityMatrix::from_diagonal(&[0.6, 0.4]).unwrap();
        let rho0 = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
        let l = likelihood_ratio_product(&tr, &rho, &rho0, 3).unwrap();
        assert!((l - 3.0 * (0.6f64 / 0.5).ln()).abs() < 1e-12);
        assert_eq!(likelihood_ratio_product(&tr, &rho0, &rho, 3).unwrap(), -l);
        assert_eq!(likelihood_ratio_product(&tr, &rho, &rho, 3).unwrap(), 0.0);
    }
}
