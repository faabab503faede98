mod oracles;

use proptest::prelude::*;
use rand::SeedableRng;
use semibandit::model::{make_exact, l2_distance, MeanAction};
use semibandit::projection::{
    approx_oracle_offsets, bisect_offsets, bisect_project, capped_softmax_into, offsets, reference_offsets, residual, PerturbedInverse,
};
use semibandit::sampling::{decompose, exploration_set, mix_exploration};
use semibandit::{ProblemConfig, Regularizer, RegularizerKind};

fn kind() -> impl Strategy<Value = RegularizerKind> {
    prop_oneof![
        Just(RegularizerKind::NegShannon),
        Just(RegularizerKind::Quadratic),
        Just(RegularizerKind::TsallisHalf)
    ]
}

/// `(K, m, seed)` with `1 ≤ m < K`.
fn sizes(max_k: usize) -> impl Strategy<Value = (usize, usize, u64)> {
    (2..=max_k).prop_flat_map(|k| (Just(k), 1..k, any::<u64>()))
}

fn instance(k: usize, m: usize, seed: u64) -> (Vec<f64>, Vec<f64>, f64) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let abar = oracles::interior_point(&mut rng, k, m);
    let lhat: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0)).collect();
    let eta = rand::Rng::random_range(&mut rng, 0.01..2.0);
    (abar, lhat, eta)
}

/// Loop length computed from the offsets directly.
fn expected_steps(c: &[f64], m: usize, reg: &Regularizer, eps: f64) -> usize {
    let shift = match reg.kind {
        RegularizerKind::NegShannon => (m as f64 / c.len() as f64).ln(),
        RegularizerKind::Quadratic => 2.0 * m as f64 / c.len() as f64,
        RegularizerKind::TsallisHalf => -0.5 / (m as f64 / c.len() as f64).sqrt(),
    };
    let lo = c.iter().map(|&x| -x - shift).fold(f64::INFINITY, f64::min);
    let hi = c.iter().map(|&x| -x - shift).fold(f64::NEG_INFINITY, f64::max);
    let ratio = 2.0 * reg.lipschitz() * (c.len() as f64).sqrt() * (hi - lo) / eps;
    if ratio <= 1.0 {
        0
    } else {
        ratio.log2().ceil() as usize
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn residual_is_nondecreasing(kind in kind(), (k, m, seed) in sizes(40), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let reg = Regularizer::new(kind);
        let (abar, lhat, eta) = instance(k, m, seed);
        let c = offsets(eta, &lhat, &abar, &reg).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(residual(lo, &c, m, &reg) <= residual(hi, &c, m, &reg));
    }

    #[test]
    fn bisection_is_within_tolerance_of_the_minimizer(kind in kind(), (k, m, seed) in sizes(128)) {
        let reg = Regularizer::new(kind);
        let eps = 1e-9;
        let (abar, lhat, eta) = instance(k, m, seed);
        let c = offsets(eta, &lhat, &abar, &reg).unwrap();
        let bis = bisect_offsets(&c, m, &reg, eps).unwrap();
        let reference = reference_offsets(&c, m, &reg).unwrap();
        prop_assert!(bis.point.distance(&reference.point) <= eps);
        prop_assert!((bis.point.sum() - m as f64).abs() <= 1e-10);
        prop_assert!(bis.point.coords().iter().all(|&x| (0.0..=1.0).contains(&x)));
        prop_assert_eq!(bis.steps, expected_steps(&c, m, &reg, eps));
    }

    #[test]
    fn quadratic_step_is_a_euclidean_projection((k, m, seed) in sizes(64)) {
        let reg = Regularizer::quadratic();
        let (abar, lhat, eta) = instance(k, m, seed);
        let cfg = ProblemConfig { eps_proj: 1e-11, ..ProblemConfig::new(k, m, 1, 1, 1.0) };
        let got = bisect_project(eta, &lhat, &MeanAction::from_vec_unchecked(abar.clone()), &cfg, &reg).unwrap();
        let y: Vec<f64> = abar.iter().zip(&lhat).map(|(a, l)| a - 0.5 * eta * l).collect();
        let want = oracles::euclidean_capped_projection(&y, m as f64);
        prop_assert!(l2_distance(got.point.coords(), &want) <= 1e-9);
    }

    #[test]
    fn shannon_ftrl_step_is_a_capped_softmax((k, m, seed) in sizes(64)) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, -4.0..4.0)).collect();
        let got = bisect_offsets(&c, m, &Regularizer::shannon(), 1e-11).unwrap();
        let want = oracles::capped_softmax(&c, m);
        prop_assert!(l2_distance(got.point.coords(), &want) <= 1e-9);
    }

    #[test]
    fn closed_form_softmax_matches_water_filling((k, m, seed) in sizes(64), spread in 1.0f64..2000.0) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, -spread..spread)).collect();
        let want = oracles::capped_softmax(&c, m);
        let mut out = vec![0.0; k];
        capped_softmax_into(&c, m, &mut Vec::new(), &mut out).unwrap();
        prop_assert!((out.iter().sum::<f64>() - m as f64).abs() <= 1e-10);
        prop_assert!(l2_distance(&out, &want) <= 1e-9 * (k as f64).sqrt());
    }

    #[test]
    fn perturbed_oracle_keeps_the_guarantee(kind in kind(), seed in any::<u64>()) {
        let (k, m, eps) = (8usize, 3usize, 1e-9);
        let reg = Regularizer::new(kind);
        let (abar, lhat, eta) = instance(k, m, seed);
        let c = offsets(eta, &lhat, &abar, &reg).unwrap();
        let tau = eps / (2.0 * (k as f64).sqrt());
        let mut noise = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut oracle = PerturbedInverse::new(move |_, _| rand::Rng::random_range(&mut noise, -tau..=tau));
        let got = approx_oracle_offsets(&c, m, &reg, eps, tau, &mut oracle, true).unwrap();
        let reference = reference_offsets(&c, m, &reg).unwrap();
        prop_assert!(got.point.distance(&reference.point) <= eps);
    }

    #[test]
    fn decomposition_reconstructs_its_source((k, m, seed) in sizes(64)) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, -1.0..2.0)).collect();
        let abar = MeanAction::from_vec_unchecked(oracles::euclidean_capped_projection(&y, m as f64));
        let d = decompose(&abar, m).unwrap();
        prop_assert!(d.len() <= k);
        prop_assert!((d.total_weight() - 1.0).abs() <= 1e-12);
        prop_assert!(d.atoms().iter().all(|(v, w)| *w >= 0.0 && v.popcount() == m));
        for (x, y) in d.mean().iter().zip(abar.coords()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn mixed_draws_have_exactly_m_arms((k, m, seed) in sizes(32), gamma in 0.0f64..0.5) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let abar = MeanAction::from_vec_unchecked(oracles::interior_point(&mut rng, k, m));
        let d = decompose(&abar, m).unwrap();
        let e = exploration_set(k, m, 0);
        for _ in 0..50 {
            prop_assert_eq!(mix_exploration(&d, gamma, &e, &mut rng).popcount(), m);
        }
    }

    #[test]
    fn slack_embedding_keeps_real_sum_at_most_m(k in 1usize..=4, seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = rand::Rng::random_range(&mut rng, 1..=k);
        let cfg = make_exact(&ProblemConfig { exact_m: false, ..ProblemConfig::new(k, m, 1, 1, 1.0) });
        prop_assert_eq!(cfg.arms, k + m);
        let y: Vec<f64> = (0..cfg.arms).map(|_| rand::Rng::random_range(&mut rng, -1.0..2.0)).collect();
        // Quadratic projection of y on the augmented instance.
        let c: Vec<f64> = y.iter().map(|v| -2.0 * v).collect();
        let aug = bisect_offsets(&c, m, &Regularizer::quadratic(), 1e-12).unwrap();
        let real = &aug.point.coords()[..k];
        prop_assert!(real.iter().sum::<f64>() <= m as f64 + 1e-10);
        prop_assert!(real.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        // The best point of the Σ ≤ m polytope is at least as close to y.
        let best = oracles::brute_force_leq_projection(&y[..k], m as f64);
        prop_assert!(best.iter().sum::<f64>() <= m as f64 + 1e-10);
        prop_assert!(l2_distance(&best, &y[..k]) <= l2_distance(real, &y[..k]) + 1e-9);
    }
}

#[test]
fn make_exact_examples() {
    let c = ProblemConfig { exact_m: false, ..ProblemConfig::new(10, 3, 100, 2, 0.1) };
    let e = make_exact(&c);
    assert_eq!((e.arms, e.m, e.exact_m, e.slack_arms), (13, 3, true, 3));
    assert!((10..13).all(|k| e.is_slack(k)) && !e.is_slack(9));
}
