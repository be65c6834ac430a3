use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schurtomo::keyl::KeylConfig;
use schurtomo::lab::*;
use schurtomo::partition::sw_uniform;
use schurtomo::tensor::{c, diag, haar_vector, trace, DensityMatrix, Deviation, PureVector};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn swap_expectation(v: &PureVector) -> f64 {
    let d = v.local_dim();
    let a = v.amplitudes();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += (a[i * d + j].conj() * a[j * d + i]).re;
        }
    }
    s
}

#[test]
fn rotation_average_matches_second_moment_formula() {
    // For traceless E, E_U[(UEU†)^{⊗2}] = (tr(E²)/(d²−1))·(F − I/d).
    let d = 2;
    let e = Deviation::new(diag(&[1.0, -1.0]) / c(2f64.sqrt())).unwrap();
    let mut r = rng(1);
    let v = PureVector::new(d, 2, haar_vector(4, &mut r).as_slice().to_vec()).unwrap();
    let tr2 = trace(&(e.matrix() * e.matrix())).re;
    let oracle = tr2 / 3.0 * (swap_expectation(&v) - 1.0 / d as f64);
    let out = rotation_average_check(&e, &v, 10_000, &mut r).unwrap();
    assert!((out.exact - oracle).abs() < 1e-12);
    assert!((out.empirical - oracle).abs() < 5.0 * out.report.stderr);
    assert!(out.report.pass);
}

#[test]
fn rotation_average_even_power_is_positive_on_symmetric_vectors() {
    let e = Deviation::new(diag(&[1.0, -1.0]) / c(2f64.sqrt())).unwrap();
    let v = PureVector::basis(2, &[0, 0]).unwrap();
    let out = rotation_average_check(&e, &v, 10_000, &mut rng(2)).unwrap();
    // e_0⊗e_0 is symmetric: (tr E²/3)(1 − 1/2) = 1/6
    assert!((out.exact - 1.0 / 6.0).abs() < 1e-12);
    assert!(out.empirical > 0.0);
    assert!(out.report.pass);
}

#[test]
fn rotation_average_zero_and_odd() {
    let mut r = rng(3);
    let v = PureVector::new(3, 3, haar_vector(27, &mut r).as_slice().to_vec()).unwrap();
    let zero = rotation_average_check(&Deviation::zero(3), &v, 100, &mut r).unwrap();
    assert_eq!(zero.report.lhs, 0.0);
    assert!(zero.report.pass);
    let g = schurtomo::tensor::gue_star(3, &mut r);
    let out = rotation_average_check(&g.scaled(0.1), &v, 5000, &mut r).unwrap();
    assert!(out.report.pass);
    assert!((out.empirical - out.exact).abs() < 5.0 * out.report.stderr + 1e-12);
}

#[test]
fn rotation_average_needs_two_copies() {
    let v = PureVector::basis(2, &[0]).unwrap();
    assert!(rotation_average_check(&Deviation::zero(2), &v, 10, &mut rng(4)).is_err());
}

#[test]
fn chi2_vanishes_at_mixed_state() {
    let out = linearization_chi2(&DensityMatrix::maximally_mixed(2), 2, 200, &mut rng(5)).unwrap();
    assert_eq!(out.report.lhs, 0.0);
    assert!(out.precondition_met && out.report.pass);
}

#[test]
fn chi2_is_quartic_for_tiny_deviation() {
    let rho = DensityMatrix::from_diagonal(&[0.5 + 1e-9 / 2f64.sqrt(), 0.5 - 1e-9 / 2f64.sqrt()]).unwrap();
    let out = linearization_chi2(&rho, 2, 500, &mut rng(6)).unwrap();
    assert!(out.report.lhs <= 1e-20, "{}", out.report.lhs);
}

#[test]
fn chi2_bound_holds_at_moderate_deviation() {
    let h = 1e-3 / 2f64.sqrt();
    let rho = DensityMatrix::from_diagonal(&[0.5 + h, 0.5 - h]).unwrap();
    let out = linearization_chi2(&rho, 3, 10_000, &mut rng(7)).unwrap();
    assert!(!out.precondition_met);
    assert!(out.report.pass);
    assert!(out.report.margin_ratio < 1e-3);
}

#[test]
fn chi2_matches_direct_difference() {
    // Independent evaluation: ⟨ρ^{⊗2} − X', UMU†⟩ for t = 2 is ⟨E⊗E, UMU†⟩.
    let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
    let e = rho.deviation_from_mixed();
    let x = schurtomo::tensor::kron_power(rho.matrix(), 2) - linearize(&rho, 2).unwrap();
    let ee = schurtomo::tensor::kron_power(e.matrix(), 2);
    assert!(schurtomo::tensor::frobenius(&(x - ee)) < 1e-15);
}

#[test]
fn skewness_random_vectors() {
    let reports = skewness_sweep(3, 4, 1000, &mut rng(8)).unwrap();
    assert_eq!(reports.len(), 1000);
    assert!(reports.iter().all(|r| r.pass));
}

#[test]
fn a_statistic_concentrates_at_sw_moment() {
    let rho0 = DensityMatrix::maximally_mixed(2);
    let m = 2000;
    let tr = keyl_transcript(&rho0, 2, m, "mixed", &mut rng(9), &KeylConfig::default()).unwrap();
    let stats = well_balanced_stats(&tr, &rho0, 2).unwrap();
    let want = sw_uniform(2, 2).unwrap().expectation(|l| l.sum_squares() as f64);
    assert!((want - 3.5).abs() < 1e-12);
    let (mean, se) = schurtomo::stats::mean_stderr(&stats.a_terms);
    assert!((mean - want).abs() < 5.0 * se.max(1e-12));
    assert!((stats.a_stat / m as f64 - mean).abs() < 1e-12);
    assert!(stats.b_stat.is_finite() && stats.b_stat >= 0.0);
}

#[test]
fn avg_likelihood_lower_bound() {
    let rho0 = DensityMatrix::maximally_mixed(2);
    let tr = keyl_transcript(&rho0, 2, 50, "mixed", &mut rng(10), &KeylConfig::default()).unwrap();
    let eps = 0.05;
    let delta = Deviation::new(diag(&[1.0, -1.0]) * c(eps / 2.0)).unwrap();
    let r = avg_likelihood_check(&tr, &rho0, &delta, eps, 2, 200, &mut rng(11)).unwrap();
    assert!(r.pass, "{r:?}");
}

#[test]
fn transcript_rejects_non_unit_outcomes() {
    let x = PureVector::new(2, 1, vec![c(1.0), c(1.0)]).unwrap();
    assert!(TranscriptRecord::new(vec![x], vec![1.0], vec!["a".into()], "s").is_err());
}
