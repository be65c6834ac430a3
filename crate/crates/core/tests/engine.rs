use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schurtomo::engine::*;
use schurtomo::tensor::{diag, frobenius, project_density, trace, trace_distance, DensityMatrix};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn assert_state(s: &DensityMatrix) {
    assert!((trace(s.matrix()).re - 1.0).abs() < 1e-9);
    assert!(s.spectrum().iter().all(|&v| v > -1e-9));
}

#[test]
fn replay_matches_bit_for_bit() {
    let rho = DensityMatrix::from_diagonal(&[0.6, 0.4]).unwrap();
    let src = DirectSource::new(rho);
    let cfg = BalancedConfig {
        keep_records: true,
        ..Default::default()
    };
    let est = learn_balanced(&src, 3, 200, &mut rng(1), &cfg).unwrap();
    let again = replay_balanced(2, 3, &est.records).unwrap();
    assert_eq!(est.e_hat.matrix(), again.matrix());
    assert_eq!(src.copies_consumed(), 600);
}

#[test]
fn balanced_rejects_oversized_batches() {
    let src = DirectSource::new(DensityMatrix::maximally_mixed(2));
    let err = learn_balanced(&src, 5, 10, &mut rng(2), &BalancedConfig::default());
    assert!(matches!(err, Err(schurtomo::Error::Precondition(_))));
}

#[test]
fn baseline_is_unbiased_on_a_diagonal_state() {
    let rho = DensityMatrix::from_diagonal(&[0.7, 0.2, 0.1]).unwrap();
    let src = DirectSource::new(rho.clone());
    let out = unentangled_baseline(&src, 20_000, &mut rng(3)).unwrap();
    // each entry of (d+1)vv† − I has variance O(d), so 20k copies give ~0.03 accuracy
    assert!(frobenius(&(&out.raw - rho.matrix())) < 0.08);
    assert_state(&out.state);
}

#[test]
fn refined_learns_mildly_skewed_state() {
    let rho = DensityMatrix::from_diagonal(&[0.6, 0.4]).unwrap();
    let src = DirectSource::new(rho.clone());
    let cfg = RefinedConfig {
        n_base: Some(2000),
        m_batches: Some(2000),
        repeats: Some(3),
        ..Default::default()
    };
    let out = learn_balanced_refined(&src, 2, 0.1, 0.1, &mut rng(4), &cfg).unwrap();
    assert_eq!(out.candidates.len(), 3);
    assert_state(&out.state);
    assert!(trace_distance(&out.state, &rho) < 0.1);
}

#[test]
fn bounded_learns_skewed_qubit() {
    let rho = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
    let src = DirectSource::new(rho.clone());
    let cfg = RefinedConfig {
        n_base: Some(3000),
        m_batches: Some(3000),
        repeats: Some(3),
        ..Default::default()
    };
    let out = learn_bounded(&src, &rho, 2, 0.1, 0.1, &mut rng(5), &cfg).unwrap();
    assert_eq!(out.spec.b(), &[1, 0]);
    assert_state(&out.state);
    let dist = trace_distance(&out.state, &rho);
    assert!(dist < 0.1, "distance {dist}");
}

#[test]
fn bounded_with_mixed_reference_uses_identity_split() {
    let rho = DensityMatrix::maximally_mixed(3);
    let src = DirectSource::new(rho.clone());
    let cfg = RefinedConfig {
        n_base: Some(500),
        m_batches: Some(500),
        repeats: Some(1),
        ..Default::default()
    };
    let out = learn_bounded(&src, &rho, 2, 0.1, 0.1, &mut rng(6), &cfg).unwrap();
    assert_eq!(out.spec.k(), 3);
    assert!(out.spec.b().iter().all(|&b| b == 0));
}

#[test]
fn projector_beta_estimate_is_binomial() {
    let rho = DensityMatrix::from_diagonal(&[0.6, 0.4]).unwrap();
    let src = DirectSource::new(rho.clone());
    let p = diag(&[1.0, 0.0]);
    let n = 4000;
    let out = learn_projector(&src, &rho, &p, 2, 0.1, 0.1, 2.0, Some(n), &mut rng(7), &RefinedConfig::default())
        .unwrap();
    let se = (0.6f64 * 0.4 / n as f64).sqrt();
    assert!((out.beta_hat - 0.6).abs() < 5.0 * se);
    // rank one: the estimate is β̂·e_1e_1†
    assert!(frobenius(&(&out.estimate - diag(&[out.beta_hat, 0.0]))) < 1e-12);
    assert_eq!(out.t_prime, 1);
}

#[test]
fn projector_precondition_on_small_mass() {
    let rho = DensityMatrix::from_diagonal(&[0.97, 0.03]).unwrap();
    let src = DirectSource::new(rho.clone());
    let p = diag(&[0.0, 1.0]);
    let out = learn_projector(&src, &rho, &p, 2, 0.1, 0.1, 2.0, Some(2000), &mut rng(8), &RefinedConfig::default());
    assert!(matches!(out, Err(schurtomo::Error::Precondition(_))));
}

#[test]
fn conditioned_batches_keep_at_least_half() {
    // tr(PρP) = 1/2 and t = 4: P[at least one success among 4] = 15/16.
    let rho = DensityMatrix::maximally_mixed(2);
    let src = DirectSource::new(rho);
    let q = diag(&[1.0, 0.0]).columns(0, 1).into_owned();
    let cond = ConditionedSource::new(&src, q, 4).unwrap();
    let mut r = rng(9);
    let trials = 4000;
    for _ in 0..trials {
        cond.draw_batch(1, &mut r).unwrap();
    }
    // single-copy requests draw single copies
    assert_eq!(src.copies_consumed(), trials);
    let before = (cond.accepted_batches(), cond.discarded_batches());
    for _ in 0..trials {
        cond.draw_batch(2, &mut r).unwrap();
    }
    let acc = cond.accepted_batches() - before.0;
    // at least two successes among four: 11/16
    let frac = acc as f64 / trials as f64;
    assert!(frac >= 0.5);
    assert!((frac - 11.0 / 16.0).abs() < 5.0 * (11.0 / 16.0 * 5.0 / 16.0 / trials as f64).sqrt());
}

#[test]
fn full_learn_t1_reduces_to_recentred_baseline() {
    let rho = DensityMatrix::from_diagonal(&[0.4, 0.3, 0.2, 0.1]).unwrap();
    let src = DirectSource::new(rho);
    let cfg = FullConfig {
        n_baseline: Some(4000),
        ..Default::default()
    };
    let out = full_learn(&src, 1, 0.2, 0.1, &mut rng(10), &cfg).unwrap();
    assert!(out.ladder.levels.is_empty());
    assert!(out.warning.is_none());
    assert_state(&out.state);
    assert!(out.budget.is_consistent());
    assert_eq!(out.budget.n_total, src.copies_consumed());
    let sigma0 = out.ladder.base_estimate.matrix();
    let d = 4;
    let want = project_density(
        &(sigma0 * schurtomo::tensor::c(2.0) - schurtomo::tensor::identity(d) / schurtomo::tensor::c(d as f64)),
        None,
    )
    .unwrap();
    // truncation and projection coincide when nothing is negative
    if want.spectrum().iter().all(|&v| v > 1e-9) {
        assert!(frobenius(&(want.matrix() - out.state.matrix())) < 1e-9);
    }
}

#[test]
fn full_learn_mixed_state_accuracy() {
    let rho = DensityMatrix::maximally_mixed(4);
    let cfg = FullConfig {
        n_baseline: Some(16_000),
        ..Default::default()
    };
    let mut good = 0;
    for seed in 0..10 {
        let src = DirectSource::new(rho.clone());
        let out = full_learn(&src, 2, 0.15, 0.1, &mut rng(100 + seed), &cfg).unwrap();
        if trace_distance(&out.state, &rho) <= 0.15 {
            good += 1;
        }
    }
    assert!(good >= 9, "{good}/10 runs within 0.15");
}

#[test]
fn full_learn_ladder_runs_at_t4() {
    let rho = DensityMatrix::from_diagonal(&[0.4, 0.3, 0.2, 0.1]).unwrap();
    let src = DirectSource::new(rho.clone());
    let cfg = FullConfig {
        n_baseline: Some(4000),
        beta_copies: Some(500),
        t_limit_slack: None,
        refined: RefinedConfig {
            n_base: Some(4000),
            m_batches: Some(20_000),
            repeats: Some(1),
            ..Default::default()
        },
        ..Default::default()
    };
    let out = full_learn(&src, 4, 0.2, 0.1, &mut rng(11), &cfg).unwrap();
    assert_eq!(out.ladder.levels.len(), 1);
    let p = &out.ladder.levels[0].projector;
    assert!(frobenius(&(p * p - p)) < 1e-9);
    assert!(frobenius(&(p.adjoint() - p)) < 1e-9);
    assert_state(&out.state);
    assert!(out.budget.is_consistent());
    assert_eq!(out.budget.per_stage.len(), 2);
    let dist = trace_distance(&out.state, &rho);
    assert!(dist < 0.3, "distance {dist}, warning {:?}", out.warning);
}

#[test]
fn full_learn_checks_batch_limit() {
    let src = DirectSource::new(DensityMatrix::maximally_mixed(2));
    let out = full_learn(&src, 5, 0.1, 0.1, &mut rng(12), &FullConfig::default());
    assert!(matches!(out, Err(schurtomo::Error::Precondition(_))));
}
