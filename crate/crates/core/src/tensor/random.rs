use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{c, inner, trace, CMatrix, CVector, DensityMatrix, Deviation, C64};
use crate::error::{domain, Error, Result};

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// Haar-random `d × d` unitary: QR of a Ginibre matrix with the phases of
/// `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng, 1.0));
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Uniformly random unit vector in `C^d`.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(d, |_, _| complex_gaussian(rng, 1.0));
    let n = v.norm();
    v / c(n)
}

/// Random full-rank state from the Hilbert–Schmidt (Ginibre) ensemble.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng, 1.0));
    let m = &g * g.adjoint();
    let tr = trace(&m);
    DensityMatrix::new_unchecked(super::hermitize(&m.map(|x| x / tr)))
}

/// `GUE(d)`: diagonal `N(0, 2/d)`, off-diagonal `N(0,1/d) + i N(0,1/d)`.
///
/// This variance convention is taken as-is; other references scale the
/// ensemble differently.
pub fn gue<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let mut g = CMatrix::zeros(d, d);
    let sd = (1.0 / d as f64).sqrt();
    for i in 0..d {
        let x: f64 = StandardNormal.sample(rng);
        g[(i, i)] = c(x * (2.0 / d as f64).sqrt());
        for j in i + 1..d {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let z = C64::new(sd * re, sd * im);
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    g
}

/// Trace-centred GUE: `G − tr(G)·I/d`.
pub fn gue_star<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Deviation {
    Deviation::center(&gue(d, rng))
}

/// A draw `ρ = (I + σG)/d` with `G ∼ GUE*(d)` conditioned on `‖G‖ ≤ cap`.
#[derive(Clone, Debug)]
pub struct HardInstance {
    pub dim: usize,
    pub gue_scale: f64,
    pub g: Deviation,
    pub state: DensityMatrix,
    /// GUE* draws consumed by the rejection loop.
    pub attempts: usize,
}

const HARD_INSTANCE_MAX_ATTEMPTS: usize = 100_000;

/// Samples the hard prior with `σ = c·ε` and the conditioning `‖G‖ ≤ 4`.
pub fn sample_hard_instance<R: Rng + ?Sized>(
    d: usize,
    eps: f64,
    c_scale: f64,
    rng: &mut R,
) -> Result<HardInstance> {
    sample_hard_instance_capped(d, c_scale * eps, 4.0, rng)
}

/// Same as [`sample_hard_instance`] with an explicit operator-norm cap on
/// `G`. Requires `cap·σ < 1` so that every accepted draw is a state.
pub fn sample_hard_instance_capped<R: Rng + ?Sized>(
    d: usize,
    sigma: f64,
    cap: f64,
    rng: &mut R,
) -> Result<HardInstance> {
    if d < 2 {
        return domain("hard instances need d ≥ 2");
    }
    if !(sigma >= 0.0) || cap * sigma >= 1.0 {
        return domain(format!(
            "σ = {sigma} with cap {cap} does not guarantee a PSD state (need cap·σ < 1)"
        ));
    }
    for attempt in 1..=HARD_INSTANCE_MAX_ATTEMPTS {
        let g = gue_star(d, rng);
        if g.op_norm() <= cap {
            let m = (CMatrix::identity(d, d) + g.matrix().map(|x| x * sigma)).map(|x| x / d as f64);
            let state = DensityMatrix::new_unchecked(super::hermitize(&m));
            return Ok(HardInstance {
                dim: d,
                gue_scale: sigma,
                g,
                state,
                attempts: attempt,
            });
        }
    }
    Err(Error::Resource(format!(
        "no GUE* draw with ‖G‖ ≤ {cap} in {HARD_INSTANCE_MAX_ATTEMPTS} attempts"
    )))
}

/// Closed form of `E_U[(U†XU)·⟨U†XU, Y⟩]` for Hermitian `X, Y`.
pub fn haar_moment_exact(x: &CMatrix, y: &CMatrix) -> CMatrix {
    let d = x.nrows() as f64;
    let trx = trace(x).re;
    let try_ = trace(y).re;
    let fx2 = inner(x, x).re;
    let id = CMatrix::identity(x.nrows(), x.nrows());
    let centred_y = y - id.map(|v| v * try_ / d);
    centred_y.map(|v| v * (fx2 - trx * trx / d) / (d * d - 1.0)) + id.map(|v| v * trx * trx * try_ / (d * d))
}

#[derive(Clone, Debug)]
pub struct HaarMomentReport {
    pub empirical: CMatrix,
    pub exact: CMatrix,
    /// Entrywise standard error of the real and imaginary parts (max of both).
    pub stderr: nalgebra::DMatrix<f64>,
    pub max_abs_deviation: f64,
    /// Largest deviation measured in units of the entry's standard error.
    pub max_z: f64,
}

/// Monte-Carlo estimate of `E_U[(U†XU)·⟨U†XU, Y⟩]` against its closed form.
pub fn haar_moment_check<R: Rng + ?Sized>(
    x: &CMatrix,
    y: &CMatrix,
    n: usize,
    rng: &mut R,
) -> Result<HaarMomentReport> {
    let d = x.nrows();
    if !x.is_square() || y.shape() != x.shape() {
        return domain("X and Y must be square with equal dimensions");
    }
    if n < 2 {
        return domain("need at least two samples");
    }
    let mut sum = CMatrix::zeros(d, d);
    let mut sum_sq_re = nalgebra::DMatrix::<f64>::zeros(d, d);
    let mut sum_sq_im = nalgebra::DMatrix::<f64>::zeros(d, d);
    for _ in 0..n {
        let u = haar_unitary(d, rng);
        let rot = u.adjoint() * x * &u;
        let w = inner(&rot, y).re;
        let sample = rot.map(|v| v * w);
        for (k, s) in sample.iter().enumerate() {
            sum_sq_re[k] += s.re * s.re;
            sum_sq_im[k] += s.im * s.im;
        }
        sum += sample;
    }
    let nf = n as f64;
    let empirical = sum.map(|v| v / nf);
    let exact = haar_moment_exact(x, y);
    let mut stderr = nalgebra::DMatrix::<f64>::zeros(d, d);
    let mut max_abs = 0.0f64;
    let mut max_z = 0.0f64;
    for k in 0..d * d {
        let m = empirical[k];
        let var_re = (sum_sq_re[k] / nf - m.re * m.re).max(0.0) * nf / (nf - 1.0);
        let var_im = (sum_sq_im[k] / nf - m.im * m.im).max(0.0) * nf / (nf - 1.0);
        let se = (var_re.max(var_im) / nf).sqrt();
        stderr[k] = se;
        let dev = (m - exact[k]).norm();
        max_abs = max_abs.max(dev);
        max_z = max_z.max(if se > 0.0 { dev / se } else if dev < 1e-12 { 0.0 } else { f64::INFINITY });
    }
    Ok(HaarMomentReport {
        empirical,
        exact,
        stderr,
        max_abs_deviation: max_abs,
        max_z,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{frobenius, identity};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in 1..6 {
            let u = haar_unitary(d, &mut rng);
            assert!(frobenius(&(u.adjoint() * &u - identity(d))) < 1e-10);
        }
        let u = haar_unitary(1, &mut rng);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gue_star_is_traceless() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let g = gue_star(5, &mut rng);
            assert!(trace(g.matrix()).norm() < 1e-12);
        }
    }

    #[test]
    fn hard_instance_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let h = sample_hard_instance(6, 0.05, 2.0, &mut rng).unwrap();
            let dev = h.state.deviation_from_mixed();
            assert!(dev.op_norm() <= 4.0 * h.gue_scale / 6.0 + 1e-12);
            assert!((trace(h.state.matrix()).re - 1.0).abs() < 1e-14);
        }
        assert!(sample_hard_instance(4, 0.25, 1.0, &mut rng).is_err());
    }

    #[test]
    fn haar_moment_identity_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = CMatrix::from_fn(3, 3, |i, j| if i == j { c(i as f64) } else { c(0.0) });
        let report = haar_moment_check(&identity(3), &y, 200, &mut rng).unwrap();
        // X = I commutes with every U, so every draw equals the mean exactly.
        assert!(report.max_abs_deviation < 1e-10);
        assert!(frobenius(&(report.exact - identity(3).map(|v| v * 3.0))) < 1e-12);
    }
}
