//! The invariant suite behind the `verify` command.

use rand::Rng;
use serde::{Deserialize, Serialize};

use schurtomo::engine::{learn_balanced, measure_povm, replay_balanced, BalancedConfig, DirectSource, MixtureSource};
use schurtomo::keyl::weak_schur_probs;
use schurtomo::lab::skewness_sweep;
use schurtomo::partition::{dim_ssyt, dim_syt, enumerate_partitions, sample_sw, schur_poly, sw_pmf};
use schurtomo::rng::substream;
use schurtomo::schur::{isotypic_projector, schur_system};
use schurtomo::split::{make_split_spec, rec, split};
use schurtomo::stats::chi_square_test;
use schurtomo::tensor::{
    diag, frobenius, g_matrix, haar_moment_check, haar_unitary, kron_power, project_density, random_density, CMatrix,
    CVector, C64,
};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn row(name: &str, pass: bool, detail: String) -> CheckRow {
    CheckRow {
        name: name.to_string(),
        pass,
        detail,
    }
}

const SIGNIFICANCE: f64 = 1e-3;

/// Runs every check at `(d, t)`; each check has its own RNG stream.
pub fn run_verify(d: usize, t: usize, seed: u64) -> Result<Vec<CheckRow>, CliError> {
    let rng_for = |k: u64| substream(seed, &[d as u64, t as u64, k]);
    let mut rows = Vec::new();

    // Σ Π_λ = I, Π_λ² = Π_λ, tr Π_λ = dim_syt·dim_ssyt
    let n = d.pow(t as u32);
    let mut sum = nalgebra::DMatrix::<f64>::zeros(n, n);
    let mut worst: f64 = 0.0;
    for lam in enumerate_partitions(t, d)? {
        let p = isotypic_projector(&lam, d)?;
        worst = worst.max((&p * &p - &p).abs().max());
        worst = worst.max((p.trace() - (dim_syt(&lam) * dim_ssyt(&lam, d)) as f64).abs());
        sum += p;
    }
    worst = worst.max((sum - nalgebra::DMatrix::<f64>::identity(n, n)).abs().max());
    rows.push(row("schur_completeness", worst < 1e-8, format!("max defect {worst:.2e}")));

    // tr(Π_λ ρ^{⊗t}) = dim(λ)·s_λ(spectrum)
    let mut rng = rng_for(1);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let rho = random_density(d, &mut rng);
        let spec = rho.spectrum();
        let dist = weak_schur_probs(&rho, t)?;
        for (lam, p) in &dist.table {
            worst = worst.max((p - dim_syt(lam) as f64 * schur_poly(lam, &spec)).abs());
        }
    }
    rows.push(row("weak_schur_born", worst < 1e-8, format!("max deviation {worst:.2e}")));

    // RSK sampler against the exact pmf
    let mut rng = rng_for(2);
    let mut alpha: Vec<f64> = (1..=d).rev().map(|k| k as f64).collect();
    let s: f64 = alpha.iter().sum();
    alpha.iter_mut().for_each(|a| *a /= s);
    let dist = sw_pmf(t, d, &alpha)?;
    let mut counts = vec![0u64; dist.table.len()];
    for _ in 0..20_000 {
        let lam = sample_sw(t, &alpha, &mut rng)?;
        let i = dist.table.iter().position(|(p, _)| *p == lam).expect("shape in table");
        counts[i] += 1;
    }
    let chi = chi_square_test(&counts, &dist.probs())?;
    rows.push(row("rsk_chi_square", chi.p_value >= SIGNIFICANCE, format!("p = {:.4}", chi.p_value)));

    // G_1(v) = diag(λ) on every highest-weight basis vector
    let sys = schur_system(d, t)?;
    let mut worst: f64 = 0.0;
    for block in &sys.blocks {
        let want = diag(&block.lam.padded(d).iter().map(|&x| x as f64).collect::<Vec<_>>());
        for v in block.basis_vectors() {
            worst = worst.max(frobenius(&(g_matrix(&v, 1)? - &want)));
        }
    }
    rows.push(row("keyl_block_identity", worst < 1e-8, format!("max deviation {worst:.2e}")));

    // rec ∘ split = id
    let mut rng = rng_for(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let eigs: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
        let s: f64 = eigs.iter().sum();
        let eigs: Vec<f64> = eigs.iter().map(|e| e / s).collect();
        let spec = make_split_spec(&eigs, d)?;
        let m = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        worst = worst.max(frobenius(&(rec(&split(&m, &spec)?, &spec)? - &m)));
    }
    rows.push(row("split_roundtrip", worst < 1e-12, format!("max deviation {worst:.2e}")));

    // Mixture simulation against the exact Born law of the mixture
    let mut rng = rng_for(5);
    let tm = t.min(2);
    let a = random_density(d, &mut rng);
    let b = random_density(d, &mut rng);
    let lambda = 0.3;
    let u = haar_unitary(d.pow(tm as u32), &mut rng);
    let povm: Vec<CVector> = (0..u.ncols()).map(|k| u.column(k).into_owned()).collect();
    let mix = a.matrix() * C64::new(lambda, 0.0) + b.matrix() * C64::new(1.0 - lambda, 0.0);
    let big = kron_power(&mix, tm);
    let probs: Vec<f64> = povm.iter().map(|z| (z.adjoint() * &big * z)[(0, 0)].re).collect();
    let src = DirectSource::new(a);
    let mixed = MixtureSource::new(&src, &b, lambda)?;
    let mut counts = vec![0u64; povm.len()];
    for _ in 0..20_000 {
        let k = measure_povm(&mixed, tm, &povm, &mut rng)?.expect("mixtures never discard");
        counts[k] += 1;
    }
    let chi = chi_square_test(&counts, &probs)?;
    rows.push(row("mixture_simulation", chi.p_value >= SIGNIFICANCE, format!("p = {:.4}", chi.p_value)));

    // Replaying stored per-batch estimates reproduces Ê exactly
    let mut rng = rng_for(6);
    let rho = random_density(d, &mut rng);
    let src = DirectSource::new(rho);
    let cfg = BalancedConfig {
        keep_records: true,
        ..Default::default()
    };
    let tb = t.min(d * d);
    let est = learn_balanced(&src, tb, 100, &mut rng, &cfg)?;
    let again = replay_balanced(d, est.t, &est.records)?;
    rows.push(row(
        "replay_determinism",
        again.matrix() == est.e_hat.matrix(),
        "100 batches".to_string(),
    ));

    // Skewness bound on random vectors
    let reports = skewness_sweep(d, t, 50, &mut rng_for(7))?;
    let worst = reports.iter().map(|r| r.margin_ratio).fold(0.0f64, f64::max);
    rows.push(row(
        "skewness",
        reports.iter().all(|r| r.pass),
        format!("worst lhs/rhs {worst:.4}"),
    ));

    // Haar second moment against its closed form
    let mut rng = rng_for(8);
    let x = random_density(d, &mut rng).into_matrix();
    let y = random_density(d, &mut rng).into_matrix();
    let report = haar_moment_check(&x, &y, 4000, &mut rng)?;
    rows.push(row("haar_moment", report.max_z < 6.0, format!("max z {:.2}", report.max_z)));

    // Projection leaves states fixed
    let rho = random_density(d, &mut rng_for(9));
    let p = project_density(rho.matrix(), None)?;
    let dev = frobenius(&(p.matrix() - rho.matrix()));
    rows.push(row("projection_fixed_point", dev < 1e-10, format!("deviation {dev:.2e}")));

    Ok(rows)
}
