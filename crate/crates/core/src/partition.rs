//! Integer partitions and the Schur–Weyl distribution.
//!
//! Everything here is exact combinatorics: hook-length and hook-content
//! dimensions in arbitrary precision, Schur polynomials through the
//! Jacobi–Trudi determinant, the Schur–Weyl probability table, and the
//! RSK row-insertion sampler that draws from it.
//!
//! The partitioned integer is written `t` throughout (the batch size).

use std::fmt;
use std::io::Write;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A partition of `total` into positive, non-increasing parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    parts: Vec<usize>,
    total: usize,
}

impl Partition {
    /// Builds a partition from a list of parts. Trailing zeros are dropped;
    /// the remaining parts must be positive and non-increasing.
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        while parts.last() == Some(&0) {
            parts.pop();
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return domain(format!("parts {parts:?} are not non-increasing"));
        }
        if parts.contains(&0) {
            return domain("zero part in the middle of a partition");
        }
        let total = parts.iter().sum();
        Ok(Self { parts, total })
    }

    /// Sorts an arbitrary frequency vector into a partition.
    pub fn from_frequencies(freqs: &[usize]) -> Self {
        let mut parts: Vec<usize> = freqs.iter().copied().filter(|&f| f > 0).collect();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        let total = parts.iter().sum();
        Self { parts, total }
    }

    /// The single-row partition `(t)`.
    pub fn row(t: usize) -> Self {
        Self::from_frequencies(&[t])
    }

    /// The single-column partition `(1,…,1)`.
    pub fn column(t: usize) -> Self {
        Self::from_frequencies(&vec![1; t])
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    /// Part `i` (zero-based), or 0 beyond the last row.
    pub fn part(&self, i: usize) -> usize {
        self.parts.get(i).copied().unwrap_or(0)
    }

    /// Parts padded with zeros to length `d`.
    pub fn padded(&self, d: usize) -> Vec<usize> {
        (0..d.max(self.parts.len())).map(|i| self.part(i)).collect()
    }

    pub fn transpose(&self) -> Partition {
        let cols = self.part(0);
        let parts = (1..=cols)
            .map(|j| self.parts.iter().filter(|&&p| p >= j).count())
            .collect();
        Partition {
            parts,
            total: self.total,
        }
    }

    /// `f_1(λ)!·f_2(λ)!⋯` where `f_i` counts the parts equal to `i`.
    pub fn count(&self) -> u128 {
        let mut out = 1u128;
        let mut i = 0;
        while i < self.parts.len() {
            let mut j = i;
            while j < self.parts.len() && self.parts[j] == self.parts[i] {
                j += 1;
            }
            out *= factorial(j - i);
            i = j;
        }
        out
    }

    pub fn sum_squares(&self) -> usize {
        self.parts.iter().map(|p| p * p).sum()
    }

    /// Dash-joined parts, e.g. `2-1-1`.
    pub fn dashed(&self) -> String {
        self.parts
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(parts: Vec<usize>) -> Result<Self> {
        Partition::new(parts)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.parts
    }
}

pub(crate) fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// All partitions of `t` with at most `max_parts` parts, in descending
/// lexicographic order.
pub fn enumerate_partitions(t: usize, max_parts: usize) -> Result<Vec<Partition>> {
    if t == 0 {
        return Err(Error::EmptyInput("cannot partition zero"));
    }
    if max_parts == 0 {
        return Err(Error::EmptyInput("max_parts must be positive"));
    }
    let mut out = Vec::new();
    let mut current = Vec::new();
    fill(t, t, max_parts, &mut current, &mut out);
    Ok(out)
}

fn fill(rest: usize, cap: usize, slots: usize, current: &mut Vec<usize>, out: &mut Vec<Partition>) {
    if rest == 0 {
        out.push(Partition {
            parts: current.clone(),
            total: current.iter().sum(),
        });
        return;
    }
    if slots == 0 {
        return;
    }
    for first in (1..=cap.min(rest)).rev() {
        current.push(first);
        fill(rest - first, first, slots - 1, current, out);
        current.pop();
    }
}

/// Transpose, `count` and `Σ λ_i²` in one call.
pub fn partition_stats(lam: &Partition) -> (Partition, u128, usize) {
    (lam.transpose(), lam.count(), lam.sum_squares())
}

/// Dominance order: every prefix sum of `lam` is at least that of `mu`.
pub fn majorizes(lam: &Partition, mu: &Partition) -> Result<bool> {
    if lam.total != mu.total {
        return domain(format!(
            "cannot compare partitions of {} and {}",
            lam.total, mu.total
        ));
    }
    let len = lam.num_parts().max(mu.num_parts());
    let (mut a, mut b) = (0, 0);
    for i in 0..len {
        a += lam.part(i);
        b += mu.part(i);
        if a < b {
            return Ok(false);
        }
    }
    Ok(true)
}

fn hooks(lam: &Partition) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
    let conj = lam.transpose();
    lam.parts.iter().enumerate().flat_map(move |(i, &row)| {
        let conj = conj.clone();
        (0..row).map(move |j| (i, j, (row - j - 1) + (conj.part(j) - i - 1) + 1))
    })
}

/// Number of standard Young tableaux of shape `lam` (hook-length formula).
pub fn dim_syt(lam: &Partition) -> u128 {
    dim_syt_big(lam)
        .to_u128()
        .expect("dim(λ) exceeds 128 bits")
}

pub(crate) fn dim_syt_big(lam: &Partition) -> BigUint {
    let num: BigUint = (1..=lam.total as u64).map(BigUint::from).product();
    let den: BigUint = hooks(lam).map(|(_, _, h)| BigUint::from(h as u64)).product();
    num / den
}

/// Number of semistandard tableaux of shape `lam` with entries in `[d]`
/// (hook-content formula). Zero when `lam` has more than `d` rows.
pub fn dim_ssyt(lam: &Partition, d: usize) -> u128 {
    if lam.num_parts() > d {
        return 0;
    }
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for (i, j, h) in hooks(lam) {
        num *= BigUint::from((d + j - i) as u64);
        den *= BigUint::from(h as u64);
    }
    (num / den).to_u128().expect("dim(V_λ) exceeds 128 bits")
}

/// Complete homogeneous symmetric polynomials `h_0..=h_max` evaluated at `alpha`.
fn complete_homogeneous(alpha: &[f64], max: usize) -> Vec<f64> {
    let mut h = vec![0.0; max + 1];
    h[0] = 1.0;
    for &a in alpha {
        // h^{(i)}_k = h^{(i-1)}_k + a·h^{(i)}_{k-1}
        for k in 1..=max {
            h[k] += a * h[k - 1];
        }
    }
    h
}

/// Schur polynomial `s_λ(α)` via the Jacobi–Trudi determinant
/// `det[h_{λ_i − i + j}]`.
pub fn schur_poly(lam: &Partition, alpha: &[f64]) -> f64 {
    let ell = lam.num_parts();
    if ell > alpha.len() {
        return 0.0;
    }
    if ell == 0 {
        return 1.0;
    }
    let h = complete_homogeneous(alpha, lam.total + ell);
    let m = DMatrix::from_fn(ell, ell, |i, j| {
        let idx = lam.parts[i] as isize - i as isize + j as isize;
        if idx < 0 {
            0.0
        } else {
            h[idx as usize]
        }
    });
    m.determinant()
}

/// Validates a spectrum: nonnegative entries, renormalized when the sum is
/// within 1e-9 of one.
pub fn normalize_spectrum(alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::EmptyInput("empty spectrum"));
    }
    if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return domain(format!("spectrum entry {a} is negative or not finite"));
    }
    let s: f64 = alpha.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return domain(format!("spectrum sums to {s}, not 1"));
    }
    Ok(alpha.iter().map(|a| a / s).collect())
}

/// The Schur–Weyl distribution `SW^t(α)` as an explicit table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SwDistribution {
    pub t: usize,
    pub d: usize,
    pub spectrum: Vec<f64>,
    pub table: Vec<(Partition, f64)>,
}

impl SwDistribution {
    pub fn prob(&self, lam: &Partition) -> f64 {
        self.table
            .iter()
            .find(|(p, _)| p == lam)
            .map_or(0.0, |(_, q)| *q)
    }

    pub fn partitions(&self) -> impl Iterator<Item = &Partition> {
        self.table.iter().map(|(p, _)| p)
    }

    pub fn probs(&self) -> Vec<f64> {
        self.table.iter().map(|(_, q)| *q).collect()
    }

    pub fn expectation(&self, f: impl Fn(&Partition) -> f64) -> f64 {
        self.table.iter().map(|(p, q)| q * f(p)).sum()
    }

    /// Inverse-CDF draw from the table.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Partition {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (p, q) in &self.table {
            acc += q;
            if u < acc {
                return p;
            }
        }
        &self.table.last().expect("nonempty table").0
    }

    /// Writes `parts,probability` rows with a header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "parts,probability")?;
        for (p, q) in &self.table {
            writeln!(w, "{},{:.12e}", p.dashed(), q)?;
        }
        Ok(())
    }
}

/// Exact Schur–Weyl table: `p(λ) = dim(λ)·s_λ(α)`.
pub fn sw_pmf(t: usize, d: usize, alpha: &[f64]) -> Result<SwDistribution> {
    if alpha.len() != d {
        return domain(format!("spectrum has length {}, expected {d}", alpha.len()));
    }
    let spectrum = normalize_spectrum(alpha)?;
    let uniform = spectrum.iter().all(|&a| (a - 1.0 / d as f64).abs() < 1e-15);
    let table = enumerate_partitions(t, d)?
        .into_iter()
        .map(|lam| {
            let q = if uniform {
                let num = dim_syt_big(&lam) * BigUint::from(dim_ssyt(&lam, d));
                let den = BigUint::from(d as u64).pow(t as u32);
                num.to_f64().unwrap_or(f64::INFINITY) / den.to_f64().unwrap_or(f64::INFINITY)
            } else {
                (dim_syt(&lam) as f64 * schur_poly(&lam, &spectrum)).max(0.0)
            };
            (lam, q)
        })
        .collect();
    Ok(SwDistribution {
        t,
        d,
        spectrum,
        table,
    })
}

/// The uniform-spectrum table `SW^t_d`.
pub fn sw_uniform(t: usize, d: usize) -> Result<SwDistribution> {
    sw_pmf(t, d, &vec![1.0 / d as f64; d])
}

/// Shape of the RSK insertion tableau of `seq` (row insertion, weakly
/// increasing rows).
pub fn rsk_shape<T: Ord + Copy>(seq: &[T]) -> Result<Partition> {
    if seq.is_empty() {
        return Err(Error::EmptyInput("RSK of an empty sequence"));
    }
    let mut rows: Vec<Vec<T>> = Vec::new();
    for &x in seq {
        let mut carry = x;
        let mut placed = false;
        for row in rows.iter_mut() {
            let pos = row.partition_point(|&y| y <= carry);
            if pos == row.len() {
                row.push(carry);
                placed = true;
                break;
            }
            std::mem::swap(&mut row[pos], &mut carry);
        }
        if !placed {
            rows.push(vec![carry]);
        }
    }
    Ok(Partition::from_frequencies(
        &rows.iter().map(Vec::len).collect::<Vec<_>>(),
    ))
}

/// Draws `λ ∼ SW^t(α)` by RSK on `t` i.i.d. symbols from `α`.
pub fn sample_sw<R: Rng + ?Sized>(t: usize, alpha: &[f64], rng: &mut R) -> Result<Partition> {
    let spectrum = normalize_spectrum(alpha)?;
    let seq: Vec<usize> = (0..t).map(|_| draw_index(&spectrum, rng)).collect();
    rsk_shape(&seq)
}

pub(crate) fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// `θ = E_{λ∼SW^t_d}[Σλ_j²] − t²/d`.
pub fn theta(t: usize, d: usize) -> Result<f64> {
    let sw = sw_uniform(t, d)?;
    Ok(sw.expectation(|p| p.sum_squares() as f64) - (t * t) as f64 / d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(parts: &[usize]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn enumerates_in_descending_lex_order() {
        let got = enumerate_partitions(4, 4).unwrap();
        let want = vec![p(&[4]), p(&[3, 1]), p(&[2, 2]), p(&[2, 1, 1]), p(&[1, 1, 1, 1])];
        assert_eq!(got, want);
        assert_eq!(enumerate_partitions(3, 1).unwrap(), vec![p(&[3])]);
        assert!(matches!(enumerate_partitions(0, 3), Err(Error::EmptyInput(_))));
        assert!(matches!(enumerate_partitions(3, 0), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn stats_match_definitions() {
        let (tr, count, sq) = partition_stats(&p(&[2, 1, 1]));
        assert_eq!((tr, count, sq), (p(&[3, 1]), 2, 6));
        let (tr, count, sq) = partition_stats(&p(&[5]));
        assert_eq!((tr, count, sq), (p(&[1, 1, 1, 1, 1]), 1, 25));
        let (tr, count, sq) = partition_stats(&p(&[2, 2]));
        assert_eq!((tr, count, sq), (p(&[2, 2]), 2, 8));
    }

    #[test]
    fn rejects_malformed_parts() {
        assert!(Partition::new(vec![1, 2]).is_err());
        assert!(Partition::new(vec![2, 0, 1]).is_err());
        assert_eq!(Partition::new(vec![2, 1, 0, 0]).unwrap(), p(&[2, 1]));
    }

    #[test]
    fn majorization_examples() {
        assert!(majorizes(&p(&[4]), &p(&[2, 2])).unwrap());
        assert!(!majorizes(&p(&[2, 2]), &p(&[3, 1])).unwrap());
        assert!(majorizes(&p(&[2, 1, 1]), &p(&[2, 1, 1])).unwrap());
        assert!(matches!(majorizes(&p(&[2]), &p(&[2, 1])), Err(Error::Domain(_))));
    }

    #[test]
    fn dimensions_small_cases() {
        assert_eq!(dim_syt(&p(&[7])), 1);
        assert_eq!(dim_syt(&p(&[2, 1])), 2);
        assert_eq!(dim_ssyt(&p(&[2]), 2), 3);
        assert_eq!(dim_ssyt(&p(&[1, 1, 1]), 2), 0);
        let total: u128 = enumerate_partitions(3, 2)
            .unwrap()
            .iter()
            .map(|l| dim_syt(l) * dim_ssyt(l, 2))
            .sum();
        assert_eq!(total, 8);
    }

    #[test]
    fn dimension_identity_small_grid() {
        for t in 1..=8 {
            for d in 1..=4usize {
                let total: u128 = enumerate_partitions(t, d)
                    .unwrap()
                    .iter()
                    .map(|l| dim_syt(l) * dim_ssyt(l, d))
                    .sum();
                assert_eq!(total, (d as u128).pow(t as u32), "t={t} d={d}");
            }
        }
    }

    #[test]
    fn schur_poly_basics() {
        let alpha = [0.5, 0.3, 0.2];
        assert!((schur_poly(&p(&[1]), &alpha) - 1.0).abs() < 1e-15);
        assert_eq!(schur_poly(&p(&[1, 1, 1, 1]), &alpha), 0.0);
        for lam in enumerate_partitions(5, 3).unwrap() {
            let ones = schur_poly(&lam, &[1.0; 3]);
            assert!((ones - dim_ssyt(&lam, 3) as f64).abs() < 1e-9);
        }
        let s: f64 = enumerate_partitions(3, 3)
            .unwrap()
            .iter()
            .map(|l| dim_syt(l) as f64 * schur_poly(l, &alpha))
            .sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sw_pmf_examples() {
        let sw = sw_uniform(2, 2).unwrap();
        assert!((sw.prob(&p(&[2])) - 0.75).abs() < 1e-15);
        assert!((sw.prob(&p(&[1, 1])) - 0.25).abs() < 1e-15);
        let sw = sw_pmf(1, 3, &[0.2, 0.5, 0.3]).unwrap();
        assert_eq!(sw.table.len(), 1);
        assert!((sw.prob(&p(&[1])) - 1.0).abs() < 1e-15);
        let sw = sw_pmf(2, 2, &[1.0, 0.0]).unwrap();
        assert!((sw.prob(&p(&[2])) - 1.0).abs() < 1e-15);
        assert!(sw.prob(&p(&[1, 1])).abs() < 1e-15);
        assert!(matches!(sw_pmf(2, 2, &[1.2, -0.2]), Err(Error::Domain(_))));
        assert!(matches!(sw_pmf(2, 2, &[0.5, 0.4]), Err(Error::Domain(_))));
        // renormalized within tolerance
        assert!(sw_pmf(2, 2, &[0.5, 0.5 + 5e-10]).is_ok());
    }

    #[test]
    fn rsk_examples() {
        assert_eq!(rsk_shape(&[1, 2, 3]).unwrap(), p(&[3]));
        assert_eq!(rsk_shape(&[3, 2, 1]).unwrap(), p(&[1, 1, 1]));
        assert_eq!(rsk_shape(&[1, 3, 2]).unwrap(), p(&[2, 1]));
        assert_eq!(rsk_shape(&[2, 2, 1, 1]).unwrap(), p(&[2, 2]));
        assert!(rsk_shape::<u8>(&[]).is_err());
    }

    #[test]
    fn sampler_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            assert_eq!(sample_sw(1, &[0.3, 0.7], &mut rng).unwrap(), p(&[1]));
            assert_eq!(sample_sw(6, &[1.0, 0.0, 0.0], &mut rng).unwrap(), p(&[6]));
        }
    }

    #[test]
    fn theta_examples() {
        assert!((theta(2, 2).unwrap() - 1.5).abs() < 1e-12);
        for d in 1..6 {
            assert!((theta(1, d).unwrap() - (1.0 - 1.0 / d as f64)).abs() < 1e-12);
        }
        assert!(theta(4, 2).unwrap() > 0.0);
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        sw_uniform(2, 2).unwrap().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "parts,probability");
        assert!(lines[1].starts_with("2,7.5"));
        assert!(lines[2].starts_with("1-1,2.5"));
    }
}
