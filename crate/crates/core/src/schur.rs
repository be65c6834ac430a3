//! Symmetric-group characters and the Schur–Weyl projectors on `(C^d)^{⊗t}`.
//!
//! Isotypic projectors come from the central character sum
//! `Π_λ = (dim λ / t!) Σ_π χ_λ(π) P_π`, which is exactly Hermitian and
//! idempotent. The highest-weight block `M_λ` is the projector onto the
//! range of `Π_λ` restricted to basis vectors of weight `λ`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Error, Result};
use crate::partition::{dim_ssyt, dim_syt, enumerate_partitions, factorial, majorizes, Partition};
use crate::tensor::{c, digits, CMatrix, PureVector, C64};

/// Largest batch size for which the `t!`-term character sum is formed.
pub const MAX_T: usize = 6;
/// Largest Hilbert-space dimension `d^t` handled densely.
pub const MAX_DIM: usize = 4096;

/// Rank threshold used when extracting the range of `Π_λ W_λ`.
const RANK_TOL: f64 = 1e-8;

fn check_size(d: usize, t: usize) -> Result<usize> {
    if d == 0 || t == 0 {
        return Err(Error::EmptyInput("d and t must be positive"));
    }
    if t > MAX_T {
        return Err(Error::Resource(format!("t = {t} exceeds the limit t ≤ {MAX_T}")));
    }
    match d.checked_pow(t as u32) {
        Some(n) if n <= MAX_DIM => Ok(n),
        _ => Err(Error::Resource(format!("d^t = {d}^{t} exceeds {MAX_DIM}"))),
    }
}

/// A permutation of `0..t` in one-line notation: `p[i] = π(i)`.
pub type Permutation = Vec<usize>;

/// All permutations of `0..t` in lexicographic order.
pub fn permutations(t: usize) -> Vec<Permutation> {
    let mut out = Vec::with_capacity(factorial(t) as usize);
    let mut p: Vec<usize> = (0..t).collect();
    loop {
        out.push(p.clone());
        // next lexicographic permutation
        let Some(i) = (1..t).rev().find(|&i| p[i - 1] < p[i]) else {
            break;
        };
        let j = (i..t).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

/// `(π∘τ)(i) = π(τ(i))`.
pub fn compose(pi: &[usize], tau: &[usize]) -> Permutation {
    tau.iter().map(|&i| pi[i]).collect()
}

pub fn inverse(pi: &[usize]) -> Permutation {
    let mut inv = vec![0; pi.len()];
    for (i, &p) in pi.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// Cycles as `[k, π(k), π²(k), …]`, each starting at its smallest element.
pub fn cycles(pi: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; pi.len()];
    let mut out = Vec::new();
    for start in 0..pi.len() {
        if seen[start] {
            continue;
        }
        let mut cyc = Vec::new();
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            cyc.push(k);
            k = pi[k];
        }
        out.push(cyc);
    }
    out
}

pub fn cycle_type(pi: &[usize]) -> Partition {
    Partition::from_frequencies(&cycles(pi).iter().map(Vec::len).collect::<Vec<_>>())
}

pub fn sign(pi: &[usize]) -> i64 {
    let even = cycles(pi).iter().filter(|c| c.len() % 2 == 0).count();
    if even % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Image of every basis index under `P_π`, which sends the factor in slot
/// `k` to slot `π(k)`.
pub fn permutation_action(pi: &[usize], d: usize) -> Vec<usize> {
    let t = pi.len();
    let n = d.pow(t as u32);
    let mut out = Vec::with_capacity(n);
    let mut target = vec![0usize; t];
    for flat in 0..n {
        let idx = digits(flat, d, t);
        for k in 0..t {
            target[pi[k]] = idx[k];
        }
        out.push(crate::tensor::undigits(&target, d));
    }
    out
}

/// The unitary `P_π` on `(C^d)^{⊗t}`:
/// `P_π(v_1⊗…⊗v_t) = v_{π⁻¹(1)}⊗…⊗v_{π⁻¹(t)}`.
pub fn permutation_operator(pi: &[usize], d: usize) -> Result<CMatrix> {
    if !is_permutation(pi) {
        return domain(format!("{pi:?} is not a permutation"));
    }
    let n = d
        .checked_pow(pi.len() as u32)
        .filter(|&n| n <= MAX_DIM)
        .ok_or_else(|| Error::Resource(format!("d^t too large for d = {d}, t = {}", pi.len())))?;
    let mut m = CMatrix::zeros(n, n);
    for (b, a) in permutation_action(pi, d).into_iter().enumerate() {
        m[(a, b)] = c(1.0);
    }
    Ok(m)
}

/// Irreducible character `χ_λ` on the class of cycle type `mu`
/// (Murnaghan–Nakayama rule on the abacus of `λ`).
pub fn character(lam: &Partition, mu: &Partition) -> Result<i64> {
    if lam.total() != mu.total() {
        return domain(format!(
            "character needs |λ| = |μ|, got {} and {}",
            lam.total(),
            mu.total()
        ));
    }
    let l = lam.num_parts();
    if lam.part(0) + l > 127 {
        return Err(Error::Resource("partition too large for the bead encoding".into()));
    }
    let mut beads: u128 = 0;
    for i in 0..l {
        beads |= 1u128 << (lam.part(i) + l - 1 - i);
    }
    let mut memo = HashMap::new();
    Ok(mn_rule(beads, mu.parts(), &mut memo))
}

fn mn_rule(beads: u128, mu: &[usize], memo: &mut HashMap<(u128, usize), i64>) -> i64 {
    let Some((&r, rest)) = mu.split_first() else {
        return 1;
    };
    if let Some(&v) = memo.get(&(beads, mu.len())) {
        return v;
    }
    let mut total = 0;
    let mut bits = beads;
    while bits != 0 {
        let b = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        if b < r || beads & (1u128 << (b - r)) != 0 {
            continue;
        }
        // Beads strictly between the landing and starting positions give the leg length.
        let between = beads & ((1u128 << b) - 1) & !((1u128 << (b - r + 1)) - 1);
        let sgn = if between.count_ones() % 2 == 0 { 1 } else { -1 };
        let moved = (beads & !(1u128 << b)) | (1u128 << (b - r));
        total += sgn * mn_rule(moved, rest, memo);
    }
    memo.insert((beads, mu.len()), total);
    total
}

/// `Π_λ` as a real `d^t × d^t` matrix (it has rational entries).
pub fn isotypic_projector(lam: &Partition, d: usize) -> Result<DMatrix<f64>> {
    let t = lam.total();
    let n = check_size(d, t)?;
    let mut out = DMatrix::<f64>::zeros(n, n);
    if lam.num_parts() > d {
        return Ok(out);
    }
    let scale = dim_syt(lam) as f64 / factorial(t) as f64;
    let mut chars: HashMap<Partition, i64> = HashMap::new();
    for pi in permutations(t) {
        let ty = cycle_type(&pi);
        let chi = match chars.get(&ty) {
            Some(&v) => v,
            None => {
                let v = character(lam, &ty)?;
                chars.insert(ty, v);
                v
            }
        };
        if chi == 0 {
            continue;
        }
        let w = scale * chi as f64;
        for (b, a) in permutation_action(&pi, d).into_iter().enumerate() {
            out[(a, b)] += w;
        }
    }
    Ok(out)
}

/// Basis indices whose symbol frequencies equal `f`.
pub fn weight_indices(f: &[usize], d: usize) -> Vec<usize> {
    let t: usize = f.iter().sum();
    let n = d.pow(t as u32);
    let mut counts = vec![0usize; d];
    (0..n)
        .filter(|&flat| {
            counts.iter_mut().for_each(|x| *x = 0);
            for s in digits(flat, d, t) {
                counts[s] += 1;
            }
            counts.as_slice() == f
        })
        .collect()
}

/// Diagonal 0/1 projector onto basis states with symbol frequencies `f`.
pub fn weight_projector(f: &[usize], d: usize) -> Result<DMatrix<f64>> {
    if f.len() != d {
        return domain(format!("frequency vector has length {}, expected {d}", f.len()));
    }
    let t: usize = f.iter().sum();
    let n = check_size(d, t)?;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in weight_indices(f, d) {
        m[(i, i)] = 1.0;
    }
    Ok(m)
}

/// True when `Π_λ` kills every basis vector of weight `f` for which `λ`
/// does not majorize `sort(f)`. Vacuously true when `λ` majorizes.
pub fn weight_orthogonality_check(lam: &Partition, f: &[usize], d: usize) -> Result<bool> {
    let sorted = Partition::from_frequencies(f);
    if sorted.total() != lam.total() {
        return domain("weight and partition sizes differ");
    }
    if majorizes(lam, &sorted)? {
        return Ok(true);
    }
    let pi = isotypic_projector(lam, d)?;
    Ok(weight_indices(f, d)
        .into_iter()
        .all(|j| pi.column(j).iter().all(|x| x.abs() < 1e-10)))
}

/// The data attached to one partition: `M_λ` through an orthonormal basis
/// of its range, plus the two dimensions.
#[derive(Clone, Debug)]
pub struct SchurBlock {
    pub lam: Partition,
    pub d: usize,
    pub t: usize,
    /// `dim(λ)`, the number of standard Young tableaux.
    pub dim_sp: usize,
    /// `dim(V_λ^d)`, the number of semistandard tableaux with entries in `[d]`.
    pub dim_v: usize,
    basis: DMatrix<f64>,
    complex_basis: Vec<Vec<C64>>,
}

impl SchurBlock {
    /// Orthonormal basis of `range(M_λ)` as the columns of a real
    /// `d^t × dim(λ)` matrix.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<PureVector> {
        (0..self.basis.ncols())
            .map(|j| {
                let amps = self.basis.column(j).iter().map(|&x| c(x)).collect();
                PureVector::new(self.d, self.t, amps).expect("basis column has d^t entries")
            })
            .collect()
    }

    /// Complex copies of the basis columns, for Born-rule evaluation.
    pub fn complex_basis(&self) -> &[Vec<C64>] {
        &self.complex_basis
    }

    /// `M_λ = Σ_j v_j v_j†`.
    pub fn m_block(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// `Π_λ`, formed on demand (it is not cached).
    pub fn pi_projector(&self) -> Result<DMatrix<f64>> {
        isotypic_projector(&self.lam, self.d)
    }
}

/// Builds `M_λ` from the principal submatrix of `Π_λ` on the weight-`λ`
/// indices. `Π_λ` preserves weight spaces, so `range(Π_λ W_λ)` is the range
/// of that submatrix.
pub fn highest_weight_block(lam: &Partition, d: usize) -> Result<SchurBlock> {
    let t = lam.total();
    check_size(d, t)?;
    if lam.num_parts() > d {
        return Err(Error::EmptyInput("partition has more rows than the local dimension"));
    }
    let weight = lam.padded(d);
    let idx = weight_indices(&weight, d);
    let mut pos = HashMap::with_capacity(idx.len());
    for (p, &i) in idx.iter().enumerate() {
        pos.insert(i, p);
    }
    let w = idx.len();
    let scale = dim_syt(lam) as f64 / factorial(t) as f64;
    let mut sub = DMatrix::<f64>::zeros(w, w);
    let mut chars: HashMap<Partition, i64> = HashMap::new();
    for pi in permutations(t) {
        let ty = cycle_type(&pi);
        let chi = match chars.get(&ty) {
            Some(&v) => v,
            None => {
                let v = character(lam, &ty)?;
                chars.insert(ty, v);
                v
            }
        };
        if chi == 0 {
            continue;
        }
        let act = permutation_action(&pi, d);
        for (b, &flat) in idx.iter().enumerate() {
            let a = pos[&act[flat]];
            sub[(a, b)] += scale * chi as f64;
        }
    }
    let sub = (&sub + sub.transpose()) * 0.5;
    let eig = sub.symmetric_eigen();
    let mut keep: Vec<usize> = (0..w).filter(|&i| eig.eigenvalues[i] > RANK_TOL).collect();
    keep.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let dim_sp = dim_syt(lam) as usize;
    if keep.len() != dim_sp {
        return Err(Error::Domain(format!(
            "highest-weight range of {lam} has rank {}, expected {dim_sp}",
            keep.len()
        )));
    }
    let n = d.pow(t as u32);
    let mut basis = DMatrix::<f64>::zeros(n, dim_sp);
    for (col, &e) in keep.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(e).into_owned();
        if let Some(lead) = v.iter().find(|x| x.abs() > 1e-12).copied() {
            if lead < 0.0 {
                v = -v;
            }
        }
        for (p, &i) in idx.iter().enumerate() {
            basis[(i, col)] = v[p];
        }
    }
    let complex_basis = (0..dim_sp)
        .map(|j| basis.column(j).iter().map(|&x| c(x)).collect())
        .collect();
    Ok(SchurBlock {
        lam: lam.clone(),
        d,
        t,
        dim_sp,
        dim_v: dim_ssyt(lam, d) as usize,
        basis,
        complex_basis,
    })
}

/// Every block for a given `(d, t)` plus the permutation data needed for
/// weak Schur sampling on product states.
#[derive(Debug)]
pub struct SchurSystem {
    pub d: usize,
    pub t: usize,
    /// Blocks for all `λ ⊢ t` with at most `d` rows, in canonical order.
    pub blocks: Vec<SchurBlock>,
    perm_cycles: Vec<Vec<Vec<usize>>>,
    /// `chars[b][p]` is `χ_{λ_b}` at permutation `p`.
    chars: Vec<Vec<i64>>,
}

impl SchurSystem {
    pub fn build(d: usize, t: usize) -> Result<Self> {
        check_size(d, t)?;
        let lams = enumerate_partitions(t, d)?;
        let perms = permutations(t);
        let types: Vec<Partition> = perms.iter().map(|p| cycle_type(p)).collect();
        let mut blocks = Vec::with_capacity(lams.len());
        let mut chars = Vec::with_capacity(lams.len());
        for lam in &lams {
            let mut by_type: HashMap<&Partition, i64> = HashMap::new();
            let mut row = Vec::with_capacity(perms.len());
            for ty in &types {
                let v = match by_type.get(ty) {
                    Some(&v) => v,
                    None => {
                        let v = character(lam, ty)?;
                        by_type.insert(ty, v);
                        v
                    }
                };
                row.push(v);
            }
            chars.push(row);
            blocks.push(highest_weight_block(lam, d)?);
        }
        Ok(Self {
            d,
            t,
            blocks,
            perm_cycles: perms.iter().map(|p| cycles(p)).collect(),
            chars,
        })
    }

    pub fn block(&self, lam: &Partition) -> Option<&SchurBlock> {
        self.blocks.iter().find(|b| &b.lam == lam)
    }

    /// `tr(Π_λ (ω_0 ⊗ … ⊗ ω_{t-1}))` for every block, via
    /// `tr(P_π ⊗ω) = Π_cycles tr(ω_{π^{m-1}k} ⋯ ω_{πk} ω_k)`.
    pub fn product_state_probs(&self, omegas: &[&CMatrix]) -> Result<Vec<f64>> {
        if omegas.len() != self.t || omegas.iter().any(|o| o.nrows() != self.d || !o.is_square()) {
            return domain(format!("need {} local operators of size {}", self.t, self.d));
        }
        let traces: Vec<f64> = self
            .perm_cycles
            .iter()
            .map(|cyc| product_trace_cycles(cyc, omegas).re)
            .collect();
        let tf = factorial(self.t) as f64;
        Ok(self
            .blocks
            .iter()
            .zip(&self.chars)
            .map(|(b, row)| {
                let s: f64 = row.iter().zip(&traces).map(|(&x, tr)| x as f64 * tr).sum();
                (b.dim_sp as f64 * s / tf).max(0.0)
            })
            .collect())
    }
}

fn product_trace_cycles(cyc: &[Vec<usize>], omegas: &[&CMatrix]) -> C64 {
    let mut total = c(1.0);
    for cycle in cyc {
        let mut acc = omegas[cycle[0]].clone();
        for &k in &cycle[1..] {
            acc = omegas[k] * acc;
        }
        total *= crate::tensor::trace(&acc);
    }
    total
}

/// `tr(P_π (ω_0 ⊗ … ⊗ ω_{t-1}))` for arbitrary square local operators.
pub fn product_trace(pi: &[usize], omegas: &[&CMatrix]) -> Result<C64> {
    if !is_permutation(pi) || pi.len() != omegas.len() {
        return domain("permutation and operator list disagree");
    }
    Ok(product_trace_cycles(&cycles(pi), omegas))
}

type Cache = Mutex<HashMap<(usize, usize), Arc<SchurSystem>>>;

/// The shared, immutable [`SchurSystem`] for `(d, t)`, built on first use.
pub fn schur_system(d: usize, t: usize) -> Result<Arc<SchurSystem>> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = cache.lock().expect("schur cache poisoned").get(&(d, t)) {
        return Ok(Arc::clone(s));
    }
    let built = Arc::new(SchurSystem::build(d, t)?);
    let mut guard = cache.lock().expect("schur cache poisoned");
    Ok(Arc::clone(guard.entry((d, t)).or_insert(built)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{frobenius, kron_all};

    fn p(parts: &[usize]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn permutation_basics() {
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(1), vec![vec![0]]);
        let swap = permutation_operator(&[1, 0], 2).unwrap();
        let e12 = PureVector::basis(2, &[0, 1]).unwrap().to_cvector();
        let e21 = PureVector::basis(2, &[1, 0]).unwrap().to_cvector();
        assert_eq!(&swap * e12, e21);
        let id = permutation_operator(&[0, 1, 2], 2).unwrap();
        assert_eq!(id, CMatrix::identity(8, 8));
        assert!(permutation_operator(&[0, 0], 2).is_err());
        assert_eq!(sign(&[1, 0, 2]), -1);
        assert_eq!(sign(&[1, 2, 0]), 1);
    }

    #[test]
    fn composition_law() {
        let perms = permutations(3);
        for a in &perms {
            for b in &perms {
                let lhs = permutation_operator(a, 2).unwrap() * permutation_operator(b, 2).unwrap();
                let rhs = permutation_operator(&compose(a, b), 2).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
        assert_eq!(compose(&[1, 2, 0], &inverse(&[1, 2, 0])), vec![0, 1, 2]);
    }

    #[test]
    fn character_values() {
        for lam in enumerate_partitions(5, 5).unwrap() {
            assert_eq!(character(&lam, &Partition::column(5)).unwrap(), dim_syt(&lam) as i64);
        }
        for mu in enumerate_partitions(4, 4).unwrap() {
            assert_eq!(character(&Partition::row(4), &mu).unwrap(), 1);
        }
        // sign character on a 3-cycle plus a fixed point and on a transposition
        assert_eq!(character(&p(&[1, 1, 1, 1]), &p(&[3, 1])).unwrap(), 1);
        assert_eq!(character(&p(&[1, 1, 1, 1]), &p(&[2, 1, 1])).unwrap(), -1);
        assert_eq!(character(&p(&[2, 1]), &p(&[3])).unwrap(), -1);
        assert_eq!(character(&p(&[2, 2]), &p(&[2, 2])).unwrap(), 2);
        assert!(character(&p(&[2]), &p(&[1])).is_err());
    }

    #[test]
    fn two_copy_projectors() {
        let swap = permutation_operator(&[1, 0], 3).unwrap().map(|z| z.re);
        let id = DMatrix::<f64>::identity(9, 9);
        let sym = isotypic_projector(&p(&[2]), 3).unwrap();
        let anti = isotypic_projector(&p(&[1, 1]), 3).unwrap();
        assert!((sym - (&id + &swap) * 0.5).norm() < 1e-12);
        assert!((anti - (&id - &swap) * 0.5).norm() < 1e-12);
    }

    #[test]
    fn weight_projector_ranks() {
        assert_eq!(weight_projector(&[2, 0], 2).unwrap().trace(), 1.0);
        assert_eq!(weight_projector(&[1, 1], 2).unwrap().trace(), 2.0);
        assert_eq!(weight_projector(&[2, 2, 1], 3).unwrap().trace(), 30.0);
        assert!(weight_projector(&[1, 1], 3).is_err());
    }

    #[test]
    fn small_highest_weight_blocks() {
        let b = highest_weight_block(&p(&[2]), 2).unwrap();
        let m = b.m_block();
        assert!((m[(0, 0)] - 1.0).abs() < 1e-12 && (m.trace() - 1.0).abs() < 1e-12);
        let b = highest_weight_block(&p(&[1, 1]), 2).unwrap();
        let v = b.basis().column(0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[1] - s).abs() < 1e-12 && (v[2] + s).abs() < 1e-12);
        assert!(highest_weight_block(&p(&[1, 1, 1]), 2).is_err());
        let b = highest_weight_block(&p(&[2, 1]), 2).unwrap();
        assert_eq!(b.dim_sp, 2);
        assert_eq!(b.dim_v, 2);
    }

    #[test]
    fn product_trace_matches_dense() {
        let a = CMatrix::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let b = CMatrix::from_fn(2, 2, |i, j| C64::new(1.0 - (i * j) as f64, 0.5));
        let e = CMatrix::from_fn(2, 2, |i, j| C64::new((i == j) as u8 as f64, 0.25));
        let ops = [&a, &b, &e];
        let dense = kron_all(&ops);
        for pi in permutations(3) {
            let want = crate::tensor::trace(&(permutation_operator(&pi, 2).unwrap() * &dense));
            let got = product_trace(&pi, &ops).unwrap();
            assert!((want - got).norm() < 1e-10, "{pi:?}: {want} vs {got}");
        }
    }

    #[test]
    fn cached_system_is_shared() {
        let a = schur_system(2, 3).unwrap();
        let b = schur_system(2, 3).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(a.blocks.len(), 2);
        let id = CMatrix::identity(2, 2).map(|z| z * 0.5);
        let q = a.product_state_probs(&[&id, &id, &id]).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-12 && (q[1] - 0.5).abs() < 1e-12);
        assert!(frobenius(&id) > 0.0);
    }
}
