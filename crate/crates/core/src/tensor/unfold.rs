use super::{kron_power, CMatrix, PureVector, C64};
use crate::error::{domain, Result};

/// Flattening of `v` with the modes in `subset` as rows and the rest as
/// columns, both in increasing mode order. `subset` may be the full set.
pub(crate) fn flatten(v: &PureVector, subset: &[usize]) -> CMatrix {
    let d = v.local_dim();
    let t = v.order();
    let mut in_s = vec![false; t];
    for &k in subset {
        in_s[k] = true;
    }
    let rows_modes: Vec<usize> = (0..t).filter(|&k| in_s[k]).collect();
    let col_modes: Vec<usize> = (0..t).filter(|&k| !in_s[k]).collect();
    let nrows = d.pow(rows_modes.len() as u32);
    let ncols = d.pow(col_modes.len() as u32);
    let mut out = CMatrix::zeros(nrows, ncols);
    for (flat, amp) in v.amplitudes().iter().enumerate() {
        let idx = super::digits(flat, d, t);
        let r = rows_modes.iter().fold(0, |acc, &k| acc * d + idx[k]);
        let col = col_modes.iter().fold(0, |acc, &k| acc * d + idx[k]);
        out[(r, col)] = *amp;
    }
    out
}

fn check_subset(t: usize, subset: &[usize], allow_full: bool) -> Result<()> {
    if subset.is_empty() {
        return domain("unfolding subset must be nonempty");
    }
    let mut seen = vec![false; t];
    for &k in subset {
        if k >= t {
            return domain(format!("mode {k} out of range for order {t}"));
        }
        if seen[k] {
            return domain(format!("mode {k} repeated"));
        }
        seen[k] = true;
    }
    if !allow_full && subset.len() == t {
        return domain("unfolding subset must be a proper subset");
    }
    Ok(())
}

/// `F_{S, [t]∖S}(T(v))`: a `d^{|S|} × d^{t-|S|}` matrix. Modes are zero-based.
pub fn unfold(v: &PureVector, subset: &[usize]) -> Result<CMatrix> {
    check_subset(v.order(), subset, false)?;
    Ok(flatten(v, subset))
}

/// All `j`-element subsets of `0..t` in lexicographic order.
pub(crate) fn subsets(t: usize, j: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(j);
    fn rec(start: usize, t: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for k in start..t {
            if t - k < j - cur.len() {
                break;
            }
            cur.push(k);
            rec(k + 1, t, j, cur, out);
            cur.pop();
        }
    }
    rec(0, t, j, &mut cur, &mut out);
    out
}

/// `G_j(v) = Σ_{|S| = j} F_S F_S†`, a `d^j × d^j` PSD matrix with trace
/// `binom(t, j)·‖v‖²`.
pub fn g_matrix(v: &PureVector, j: usize) -> Result<CMatrix> {
    let t = v.order();
    if j == 0 || j > t {
        return domain(format!("G_j needs 1 ≤ j ≤ t, got j = {j}, t = {t}"));
    }
    let n = v.local_dim().pow(j as u32);
    let mut g = CMatrix::zeros(n, n);
    for s in subsets(t, j) {
        let f = flatten(v, &s);
        g += &f * f.adjoint();
    }
    Ok(g)
}

/// `⟨Σ_sym E^{⊗k} ⊗ I^{⊗(t-k)}, vv†⟩`, evaluated as `tr(E^{⊗k} G_k(v))`.
pub fn sym_inner(e: &CMatrix, k: usize, v: &PureVector) -> Result<f64> {
    if e.nrows() != v.local_dim() || !e.is_square() {
        return domain("E must be d × d");
    }
    let g = g_matrix(v, k)?;
    let ek = kron_power(e, k);
    let val: C64 = ek.iter().zip(g.transpose().iter()).map(|(a, b)| a * b).sum();
    Ok(val.re)
}

#[cfg(test)]
mod tests {
    use super::super::{c, diag, frobenius, CVector};
    use super::*;

    fn singlet() -> PureVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureVector::new(2, 2, vec![c(0.0), c(s), c(-s), c(0.0)]).unwrap()
    }

    #[test]
    fn unfold_product_vector() {
        let v = PureVector::basis(2, &[0, 1]).unwrap();
        let f = unfold(&v, &[0]).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert_eq!(f, want);
        assert!(unfold(&v, &[]).is_err());
        assert!(unfold(&v, &[0, 1]).is_err());
        assert!(unfold(&v, &[2]).is_err());
    }

    #[test]
    fn unfold_complement_is_transpose() {
        let amps: Vec<C64> = (0..27).map(|i| C64::new(i as f64, (i * i) as f64 * 0.1)).collect();
        let v = PureVector::new(3, 3, amps).unwrap();
        let a = unfold(&v, &[1]).unwrap();
        let b = unfold(&v, &[0, 2]).unwrap();
        assert_eq!(a.transpose(), b);
        assert!((frobenius(&a) - v.norm()).abs() < 1e-12);
    }

    #[test]
    fn g1_examples() {
        let v = PureVector::basis(2, &[0, 1]).unwrap();
        assert_eq!(g_matrix(&v, 1).unwrap(), diag(&[1.0, 1.0]));
        let u = CVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]);
        let v = PureVector::product(&[u.clone(), u.clone(), u.clone()]).unwrap();
        let g = g_matrix(&v, 1).unwrap();
        let want = (&u * u.adjoint()).map(|x| x * 3.0);
        assert!(frobenius(&(g - want)) < 1e-12);
        let g = g_matrix(&singlet(), 1).unwrap();
        assert!(frobenius(&(g - diag(&[1.0, 1.0]))) < 1e-12);
        assert!(g_matrix(&singlet(), 0).is_err());
        assert!(g_matrix(&singlet(), 3).is_err());
        // j = t sums over the single full set
        let g2 = g_matrix(&singlet(), 2).unwrap();
        assert!((super::super::trace(&g2).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sym_inner_examples() {
        let v = PureVector::basis(2, &[0, 1]).unwrap();
        let e = CMatrix::from_row_slice(2, 2, &[c(0.3), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(-0.3)]);
        let val = sym_inner(&e, 1, &v).unwrap();
        assert!((val - (e[(0, 0)].re + e[(1, 1)].re)).abs() < 1e-12);
        assert_eq!(sym_inner(&CMatrix::zeros(2, 2), 1, &v).unwrap(), 0.0);
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 3), vec![vec![0, 1, 2]]);
    }
}
