use serde::{Deserialize, Serialize};

use super::{c, frobenius, hermitian_defect, hermitize, trace, CMatrix, CVector, HermitianEigen, C64};
use crate::error::{domain, Result};

/// Tolerance used when validating states and deviations.
pub const STATE_TOL: f64 = 1e-10;

/// A `d × d` Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, STATE_TOL)
    }

    pub fn with_tolerance(entries: CMatrix, tol: f64) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return domain(format!(
                "density matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            ));
        }
        let herm = hermitian_defect(&entries);
        if herm > tol {
            return domain(format!("matrix is not Hermitian (defect {herm:.3e})"));
        }
        let tr = trace(&entries);
        if (tr - c(1.0)).norm() > tol {
            return domain(format!("trace is {tr}, not 1"));
        }
        let entries = hermitize(&entries);
        let min = HermitianEigen::new(&entries).values.last().copied().unwrap_or(0.0);
        if min < -tol {
            return domain(format!("matrix is not PSD (min eigenvalue {min:.3e})"));
        }
        Ok(Self { entries })
    }

    pub(crate) fn new_unchecked(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            entries: CMatrix::identity(d, d).map(|x| x / d as f64),
        }
    }

    /// Diagonal state with the given probabilities.
    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(super::diag(probs))
    }

    /// Pure state `ψψ†` (normalizes `ψ`).
    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return domain("zero vector has no pure state");
        }
        let u = psi / c(n);
        Self::new(&u * u.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    /// Eigenvalues in descending order.
    pub fn spectrum(&self) -> Vec<f64> {
        HermitianEigen::new(&self.entries)
            .values
            .into_iter()
            .map(|v| v.max(0.0))
            .collect()
    }

    pub fn op_norm(&self) -> f64 {
        self.spectrum().first().copied().unwrap_or(0.0)
    }

    /// `ρ − I/d`.
    pub fn deviation_from_mixed(&self) -> Deviation {
        let d = self.dim();
        Deviation {
            entries: &self.entries - CMatrix::identity(d, d).map(|x| x / d as f64),
        }
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self {
            entries: hermitize(&(u * &self.entries * u.adjoint())),
        }
    }
}

/// A traceless Hermitian `d × d` matrix (a deviation such as `ρ − I/d`).
#[derive(Clone, Debug, PartialEq)]
pub struct Deviation {
    entries: CMatrix,
}

impl Deviation {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return domain("deviation must be square");
        }
        let herm = hermitian_defect(&entries);
        if herm > STATE_TOL {
            return domain(format!("deviation is not Hermitian (defect {herm:.3e})"));
        }
        let tr = trace(&entries);
        if tr.norm() > STATE_TOL {
            return domain(format!("deviation has trace {tr}"));
        }
        Ok(Self {
            entries: hermitize(&entries),
        })
    }

    pub fn zero(d: usize) -> Self {
        Self {
            entries: CMatrix::zeros(d, d),
        }
    }

    /// Removes the trace part of a Hermitian matrix.
    pub fn center(m: &CMatrix) -> Self {
        let d = m.nrows();
        let shift = trace(m) / c(d as f64);
        let mut entries = hermitize(m);
        for i in 0..d {
            entries[(i, i)] -= shift;
        }
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(&self.entries)
    }

    pub fn op_norm(&self) -> f64 {
        let v = HermitianEigen::new(&self.entries).values;
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            entries: self.entries.map(|x| x * s),
        }
    }

    /// `I/d + E` when that is a valid state.
    pub fn around_mixed(&self) -> Result<DensityMatrix> {
        let d = self.dim();
        DensityMatrix::new(CMatrix::identity(d, d).map(|x| x / d as f64) + &self.entries)
    }
}

/// A vector in `(C^d)^{⊗t}` under the crate's mode convention.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureVector {
    local_dim: usize,
    order: usize,
    amplitudes: Vec<C64>,
}

impl PureVector {
    pub fn new(local_dim: usize, order: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let expect = super::checked_pow(local_dim, order);
        if expect != Some(amplitudes.len()) {
            return domain(format!(
                "{} amplitudes cannot form an order-{order} tensor over C^{local_dim}",
                amplitudes.len()
            ));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return domain("non-finite amplitude");
        }
        Ok(Self {
            local_dim,
            order,
            amplitudes,
        })
    }

    /// `u_0 ⊗ u_1 ⊗ … ⊗ u_{t-1}`.
    pub fn product(factors: &[CVector]) -> Result<Self> {
        let d = factors.first().map_or(0, |f| f.len());
        if d == 0 || factors.iter().any(|f| f.len() != d) {
            return domain("product factors must share a nonzero dimension");
        }
        let mut amps = vec![c(1.0)];
        for f in factors {
            amps = amps
                .iter()
                .flat_map(|a| f.iter().map(move |b| a * b))
                .collect();
        }
        Self::new(d, factors.len(), amps)
    }

    /// `e_{i_0} ⊗ … ⊗ e_{i_{t-1}}` (zero-based indices).
    pub fn basis(local_dim: usize, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= local_dim) {
            return domain("basis index out of range");
        }
        let n = local_dim.pow(indices.len() as u32);
        let mut amps = vec![c(0.0); n];
        amps[super::undigits(indices, local_dim)] = c(1.0);
        Self::new(local_dim, indices.len(), amps)
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= STATE_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return domain("cannot normalize the zero vector");
        }
        Ok(Self {
            local_dim: self.local_dim,
            order: self.order,
            amplitudes: self.amplitudes.iter().map(|a| a / n).collect(),
        })
    }

    pub fn to_cvector(&self) -> CVector {
        CVector::from_column_slice(&self.amplitudes)
    }

    /// `v† (A ⊗ … ⊗ A) v`, the Born weight of `v` under `A^{⊗t}`.
    pub fn power_expectation(&self, a: &CMatrix) -> f64 {
        let ops = vec![a; self.order];
        super::product_expectation(&ops, &self.amplitudes).re
    }

    /// `U^{⊗t} v`.
    pub fn rotate(&self, u: &CMatrix) -> Self {
        let ops = vec![u; self.order];
        Self {
            local_dim: self.local_dim,
            order: self.order,
            amplitudes: super::apply_product(&ops, &self.amplitudes),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::from_diagonal(&[0.7, 0.3]).is_ok());
        assert!(matches!(
            DensityMatrix::from_diagonal(&[1.2, -0.2]),
            Err(Error::Domain(_))
        ));
        assert!(DensityMatrix::from_diagonal(&[0.5, 0.4]).is_err());
        let mut m = super::super::diag(&[0.5, 0.5]);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        let mm = DensityMatrix::maximally_mixed(3);
        assert!((mm.op_norm() - 1.0 / 3.0).abs() < 1e-15);
        assert!(mm.deviation_from_mixed().frobenius() < 1e-15);
    }

    #[test]
    fn deviation_centering() {
        let m = super::super::diag(&[1.0, 2.0, 6.0]);
        let e = Deviation::center(&m);
        assert!(trace(e.matrix()).norm() < 1e-15);
        assert!(Deviation::new(m).is_err());
    }

    #[test]
    fn pure_vector_shapes() {
        assert!(PureVector::new(2, 3, vec![c(0.0); 7]).is_err());
        let v = PureVector::basis(3, &[2, 0]).unwrap();
        assert_eq!(v.amplitudes()[6], c(1.0));
        let e0 = CVector::from_vec(vec![c(1.0), c(0.0)]);
        let e1 = CVector::from_vec(vec![c(0.0), c(1.0)]);
        let p = PureVector::product(&[e0, e1]).unwrap();
        assert_eq!(p, PureVector::basis(2, &[0, 1]).unwrap());
        assert!(p.is_normalized());
    }
}
