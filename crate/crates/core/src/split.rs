//! Quantum splitting: spreading large eigendirections over duplicated
//! coordinates so that the result has a small operator norm.
//!
//! Coordinates of the split space are labels `(j, s)` with `s` a bitstring
//! of length `b_j`, sorted by `j` and then lexicographically by `s`. A
//! bitstring is stored as an integer whose most significant of `b_j` bits is
//! the first character, so lexicographic order is numeric order and
//! `s[:b]` is a right shift.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::partition::draw_index;
use crate::tensor::{digits, product_expectation, CMatrix, CVector, DensityMatrix, C64};

/// Largest exponent accepted in a spec.
pub const MAX_B: u32 = 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct SplitSpec {
    b: Vec<u32>,
    k: usize,
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    b: Vec<u32>,
    k: usize,
}

impl TryFrom<SpecRepr> for SplitSpec {
    type Error = crate::Error;
    fn try_from(r: SpecRepr) -> Result<Self> {
        let spec = SplitSpec::new(r.b)?;
        if spec.k != r.k {
            return domain(format!("k = {} does not match exponents (expected {})", r.k, spec.k));
        }
        Ok(spec)
    }
}

impl From<SplitSpec> for SpecRepr {
    fn from(s: SplitSpec) -> Self {
        SpecRepr { b: s.b, k: s.k }
    }
}

impl SplitSpec {
    pub fn new(b: Vec<u32>) -> Result<Self> {
        if b.is_empty() {
            return domain("split spec needs at least one coordinate");
        }
        if let Some(&big) = b.iter().find(|&&x| x > MAX_B) {
            return domain(format!("exponent {big} exceeds {MAX_B}"));
        }
        let mut offsets = Vec::with_capacity(b.len());
        let mut k = 0usize;
        for &bj in &b {
            offsets.push(k);
            k += 1usize << bj;
        }
        Ok(Self { b, k, offsets })
    }

    /// The all-zero spec, for which splitting is the identity.
    pub fn identity(d: usize) -> Self {
        Self::new(vec![0; d]).expect("nonempty")
    }

    pub fn b(&self) -> &[u32] {
        &self.b
    }

    pub fn d(&self) -> usize {
        self.b.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_b(&self) -> u32 {
        self.b.iter().copied().max().unwrap_or(0)
    }

    /// Row index of the label `(j, s)`.
    pub fn index(&self, j: usize, s: usize) -> usize {
        self.offsets[j] + s
    }

    /// All labels `(j, s)` in index order.
    pub fn index_map(&self) -> Vec<(usize, usize)> {
        self.b
            .iter()
            .enumerate()
            .flat_map(|(j, &bj)| (0..1usize << bj).map(move |s| (j, s)))
            .collect()
    }

    /// Label `(j, s)` rendered with `s` as a 0/1 string.
    pub fn label(&self, j: usize, s: usize) -> String {
        let bj = self.b[j] as usize;
        let bits: String = (0..bj)
            .map(|i| if (s >> (bj - 1 - i)) & 1 == 1 { '1' } else { '0' })
            .collect();
        format!("({}, \"{}\")", j, bits)
    }
}

/// `b_j` is the smallest nonnegative integer with `2^{b_j} ≥ d·eigs_j`.
pub fn make_split_spec(eigs: &[f64], d: usize) -> Result<SplitSpec> {
    if eigs.len() != d || d == 0 {
        return domain(format!("expected {d} eigenvalues, got {}", eigs.len()));
    }
    let total: f64 = eigs.iter().sum();
    if total > 1.0 + 1e-9 {
        return domain(format!("eigenvalues sum to {total} > 1"));
    }
    let b = eigs
        .iter()
        .map(|&e| {
            let target = d as f64 * e;
            let mut bj = 0u32;
            while ((1u64 << bj) as f64) < target * (1.0 - 1e-12) && bj < MAX_B {
                bj += 1;
            }
            bj
        })
        .collect();
    SplitSpec::new(b)
}

fn check_dim(m: &CMatrix, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return domain(format!("{what} must be {n}x{n}, got {}x{}", m.nrows(), m.ncols()));
    }
    Ok(())
}

/// `Split(M)`: entry `((j1,s1),(j2,s2))` is `M_{j1 j2}/2^{max(b)}` when the
/// shorter string is a prefix of the longer one, and 0 otherwise.
pub fn split(m: &CMatrix, spec: &SplitSpec) -> Result<CMatrix> {
    check_dim(m, spec.d(), "split input")?;
    let labels = spec.index_map();
    let mut out = CMatrix::zeros(spec.k, spec.k);
    for (r, &(j1, s1)) in labels.iter().enumerate() {
        for (col, &(j2, s2)) in labels.iter().enumerate() {
            let (b1, b2) = (spec.b[j1], spec.b[j2]);
            let (related, big) = if b1 <= b2 {
                (s2 >> (b2 - b1) == s1, b2)
            } else {
                (s1 >> (b1 - b2) == s2, b1)
            };
            if related {
                out[(r, col)] = m[(j1, j2)] / (1u64 << big) as f64;
            }
        }
    }
    Ok(out)
}

/// `Rec(N)`: sums the entries of `N` that `Split` fills from each `M_{j1 j2}`.
pub fn rec(n: &CMatrix, spec: &SplitSpec) -> Result<CMatrix> {
    check_dim(n, spec.k, "rec input")?;
    let d = spec.d();
    let mut out = CMatrix::zeros(d, d);
    for j1 in 0..d {
        for j2 in 0..d {
            let (b1, b2) = (spec.b[j1], spec.b[j2]);
            let mut acc = C64::new(0.0, 0.0);
            if b1 <= b2 {
                for s in 0..1usize << b2 {
                    acc += n[(spec.index(j1, s >> (b2 - b1)), spec.index(j2, s))];
                }
            } else {
                for s in 0..1usize << b1 {
                    acc += n[(spec.index(j1, s), spec.index(j2, s >> (b1 - b2)))];
                }
            }
            out[(j1, j2)] = acc;
        }
    }
    Ok(out)
}

/// Column index in the split space that `e_j` maps to under `V_s`.
fn embed_index(spec: &SplitSpec, s: usize, j: usize) -> usize {
    spec.index(j, s >> (spec.max_b() - spec.b[j]))
}

/// `V_s`, the `k × d` isometry `e_j ↦ e_{(j, s[:b_j])}` for a bitstring
/// `s` of length `max(b)`.
pub fn embed_isometry(spec: &SplitSpec, s: usize) -> Result<CMatrix> {
    if s >= 1usize << spec.max_b() {
        return domain(format!("bitstring {s} longer than {} bits", spec.max_b()));
    }
    let mut v = CMatrix::zeros(spec.k, spec.d());
    for j in 0..spec.d() {
        v[(embed_index(spec, s, j), j)] = C64::new(1.0, 0.0);
    }
    Ok(v)
}

/// `V_s M V_s†` without forming `V_s`.
pub fn embed(m: &CMatrix, spec: &SplitSpec, s: usize) -> CMatrix {
    let mut out = CMatrix::zeros(spec.k, spec.k);
    for a in 0..spec.d() {
        for b in 0..spec.d() {
            out[(embed_index(spec, s, a), embed_index(spec, s, b))] = m[(a, b)];
        }
    }
    out
}

/// Checks `Σ z z† = I` for a rank-one POVM given by weighted vectors.
pub fn check_povm(povm: &[CVector], dim: usize, tol: f64) -> Result<()> {
    if povm.is_empty() {
        return domain("POVM has no outcomes");
    }
    if povm.iter().any(|z| z.len() != dim) {
        return domain(format!("POVM vectors must have length {dim}"));
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for z in povm {
        sum += z * z.adjoint();
    }
    let defect = (sum - CMatrix::identity(dim, dim)).iter().fold(0.0f64, |m, x| m.max(x.norm()));
    if defect > tol {
        return domain(format!("POVM elements do not sum to identity (defect {defect:.3e})"));
    }
    Ok(())
}

/// Measures `Split(ρ)^{⊗t}` with `povm` using only `ρ^{⊗t}`.
///
/// Each copy gets an independent uniform string `s_i`; every POVM vector is
/// pulled back through `V_{s_1}⊗…⊗V_{s_t}` (a pure re-indexing) and the
/// outcome is drawn by the Born rule on `ρ^{⊗t}`.
pub fn simulate_split_measurement<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    t: usize,
    povm: &[CVector],
    spec: &SplitSpec,
    rng: &mut R,
) -> Result<usize> {
    if rho.dim() != spec.d() {
        return domain("state and spec dimensions differ");
    }
    let kt = crate::tensor::checked_pow(spec.k, t)
        .ok_or_else(|| crate::Error::Resource("k^t overflows".into()))?;
    check_povm(povm, kt, 1e-8)?;
    let d = spec.d();
    let strings: Vec<usize> = (0..t).map(|_| rng.random_range(0..1usize << spec.max_b())).collect();
    let dt = d.pow(t as u32);
    let pulled_index: Vec<usize> = (0..dt)
        .map(|flat| {
            digits(flat, d, t)
                .iter()
                .zip(&strings)
                .fold(0, |acc, (&j, &s)| acc * spec.k + embed_index(spec, s, j))
        })
        .collect();
    let ops = vec![rho.matrix(); t];
    let weights: Vec<f64> = povm
        .iter()
        .map(|z| {
            let y: Vec<C64> = pulled_index.iter().map(|&i| z[i]).collect();
            product_expectation(&ops, &y).re.max(0.0)
        })
        .collect();
    Ok(draw_index(&weights, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{c, diag, frobenius};

    #[test]
    fn spec_from_eigenvalues() {
        assert_eq!(make_split_spec(&[0.25; 4], 4).unwrap().b(), &[0, 0, 0, 0]);
        let s = make_split_spec(&[0.75, 0.25], 2).unwrap();
        assert_eq!(s.b(), &[1, 0]);
        assert_eq!(s.k(), 3);
        let s = make_split_spec(&[1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(s.b(), &[2, 0, 0]);
        assert!(s.k() <= 12);
        assert!(make_split_spec(&[0.9, 0.9], 2).is_err());
    }

    #[test]
    fn split_example_and_identity() {
        let spec = SplitSpec::new(vec![1, 0]).unwrap();
        let out = split(&diag(&[0.75, 0.25]), &spec).unwrap();
        assert!(frobenius(&(out - diag(&[0.375, 0.375, 0.25]))) < 1e-15);
        let m = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(split(&m, &SplitSpec::identity(3)).unwrap(), m);
        assert_eq!(rec(&CMatrix::zeros(3, 3), &spec).unwrap(), CMatrix::zeros(2, 2));
    }

    #[test]
    fn isometry_and_average() {
        let spec = SplitSpec::new(vec![1, 0]).unwrap();
        let v = embed_isometry(&spec, 0).unwrap();
        assert_eq!(v[(0, 0)], c(1.0));
        assert_eq!(v[(2, 1)], c(1.0));
        assert_eq!(embed_isometry(&SplitSpec::identity(2), 0).unwrap(), CMatrix::identity(2, 2));
        let spec = SplitSpec::new(vec![1, 1]).unwrap();
        let m = CMatrix::from_fn(2, 2, |i, j| C64::new(1.0 + i as f64, j as f64 - 0.5));
        let avg = (0..2).fold(CMatrix::zeros(4, 4), |acc, s| {
            let v = embed_isometry(&spec, s).unwrap();
            acc + &v * &m * v.adjoint() * c(0.5)
        });
        assert!(frobenius(&(avg - split(&m, &spec).unwrap())) < 1e-12);
        assert!(embed_isometry(&spec, 2).is_err());
    }

    #[test]
    fn spec_json() {
        let spec = SplitSpec::new(vec![2, 0, 1]).unwrap();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"b":[2,0,1],"k":7}"#);
        let back: SplitSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<SplitSpec>(r#"{"b":[1],"k":3}"#).is_err());
        assert_eq!(spec.label(0, 2), "(0, \"10\")");
    }

    #[test]
    fn povm_completeness_is_enforced() {
        let rho = DensityMatrix::maximally_mixed(2);
        let spec = SplitSpec::identity(2);
        let bad = vec![CVector::from_vec(vec![c(1.0), c(0.0)])];
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        assert!(simulate_split_measurement(&rho, 1, &bad, &spec, &mut rng).is_err());
    }
}
