//! Dense complex linear algebra on `(C^d)^{⊗t}`.
//!
//! Mode convention: a vector in `C^{d^t}` is the row-major flattening of a
//! `d × … × d` tensor, so mode 0 is the slowest-varying index
//! (`flat = Σ_k i_k · d^{t-1-k}`). Every module that reshapes, permutes or
//! applies local operators uses this convention.

mod golden;
mod project;
mod random;
mod states;
mod unfold;

pub use golden::{read_matrix, write_matrix, GOLDEN_MAGIC};
pub use project::{norms_and_distances, project_density, trace_distance, Norms};
pub use random::{
    gue, gue_star, haar_moment_check, haar_moment_exact, haar_unitary, haar_vector,
    random_density, sample_hard_instance, sample_hard_instance_capped, HaarMomentReport,
    HardInstance,
};
pub use states::{DensityMatrix, Deviation, PureVector, STATE_TOL};
pub use unfold::{g_matrix, sym_inner, unfold};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&v| c(v))))
}

/// `⟨A, B⟩ = tr(A† B)`.
pub fn inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Averages `A` with its adjoint.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).map(|x| x * 0.5)
}

/// `A^{⊗k}` as a dense `d^k × d^k` matrix.
pub fn kron_power(a: &CMatrix, k: usize) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for _ in 0..k {
        out = out.kronecker(a);
    }
    out
}

/// Dense `A_0 ⊗ A_1 ⊗ … ⊗ A_{t-1}`.
pub fn kron_all(ops: &[&CMatrix]) -> CMatrix {
    ops.iter()
        .fold(CMatrix::identity(1, 1), |acc, op| acc.kronecker(*op))
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues in
/// descending order and eigenvectors phase-fixed so that their first
/// non-negligible component is real and positive.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(a: &CMatrix) -> Self {
        let h = hermitize(a);
        let eig = h.symmetric_eigen();
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(i).into_owned();
            if let Some(lead) = v.iter().find(|x| x.norm() > 1e-12).copied() {
                let phase = lead.conj() / lead.norm();
                v *= phase;
            }
            vectors.set_column(col, &v);
        }
        Self { values, vectors }
    }

    /// `V · diag(f(λ)) · V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let scaled = CVector::from_iterator(self.values.len(), self.values.iter().map(|&v| c(f(v))));
        &self.vectors * CMatrix::from_diagonal(&scaled) * self.vectors.adjoint()
    }

    pub fn rebuild(&self, values: &[f64]) -> CMatrix {
        let scaled = CVector::from_iterator(values.len(), values.iter().map(|&v| c(v)));
        &self.vectors * CMatrix::from_diagonal(&scaled) * self.vectors.adjoint()
    }
}

/// `d^t`, or `None` on overflow.
pub fn checked_pow(d: usize, t: usize) -> Option<usize> {
    d.checked_pow(t as u32)
}

/// Applies `op` to mode `k` of the flattened order-`t` tensor `v`.
pub fn apply_to_mode(v: &[C64], d: usize, t: usize, k: usize, op: &CMatrix) -> Vec<C64> {
    let stride = d.pow((t - 1 - k) as u32);
    let block = stride * d;
    let mut out = vec![ZERO; v.len()];
    let mut fibre = vec![ZERO; d];
    for base in (0..v.len()).step_by(block) {
        for inner in 0..stride {
            for (a, f) in fibre.iter_mut().enumerate() {
                *f = v[base + a * stride + inner];
            }
            for a in 0..d {
                let mut acc = ZERO;
                for (b, f) in fibre.iter().enumerate() {
                    acc += op[(a, b)] * f;
                }
                out[base + a * stride + inner] = acc;
            }
        }
    }
    out
}

/// `(A_0 ⊗ … ⊗ A_{t-1}) v` without forming the Kronecker product.
pub fn apply_product(ops: &[&CMatrix], v: &[C64]) -> Vec<C64> {
    let t = ops.len();
    let d = ops.first().map_or(1, |o| o.nrows());
    let mut cur = v.to_vec();
    for (k, op) in ops.iter().enumerate() {
        cur = apply_to_mode(&cur, d, t, k, op);
    }
    cur
}

/// `v† (A_0 ⊗ … ⊗ A_{t-1}) v`.
pub fn product_expectation(ops: &[&CMatrix], v: &[C64]) -> C64 {
    let w = apply_product(ops, v);
    v.iter().zip(&w).map(|(a, b)| a.conj() * b).sum()
}

pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Digits of `flat` in base `d`, most significant first.
pub fn digits(mut flat: usize, d: usize, t: usize) -> Vec<usize> {
    let mut out = vec![0; t];
    for k in (0..t).rev() {
        out[k] = flat % d;
        flat /= d;
    }
    out
}

pub fn undigits(idx: &[usize], d: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * d + i)
}
