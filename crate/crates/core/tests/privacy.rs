use std::sync::Arc;

use approx::assert_abs_diff_eq;
use itertools::Itertools;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rnss::privacy::{
    empirical_mi, gaussian_entropy_bits, gaussian_mi_bits, naive_scheme_bound, snr_bits,
    CovarianceAccumulator, LeakageModel, Quantity, SampleSpec, WitnessMode, WorstCaseSearch,
};
use rnss::{Error, EvaluationDomain, Execution, SharingParams};

fn model(
    points: Vec<f64>,
    t: usize,
    sigma2_y: f64,
    sigma2_s: f64,
    witness: Vec<f64>,
) -> LeakageModel {
    let d = Arc::new(EvaluationDomain::new(points, t).unwrap());
    LeakageModel::new(
        d,
        &SharingParams::new(0.0, sigma2_y, 0).unwrap(),
        sigma2_s,
        witness,
    )
    .unwrap()
}

fn grid_model(sigma2_y: f64, witness_idx: &[usize]) -> LeakageModel {
    let d = Arc::new(EvaluationDomain::grid(11, 5).unwrap());
    let xs = witness_idx.iter().map(|&i| d.point(i)).collect();
    LeakageModel::new(d, &SharingParams::new(0.0, sigma2_y, 0).unwrap(), 1.0, xs).unwrap()
}

const EXAMPLE_WITNESS: [usize; 5] = [0, 1, 3, 6, 10];
const EXAMPLE_VIEW: [usize; 5] = [2, 4, 5, 7, 8];

/// Anchor weight in the form `(p / x_j) * prod_{k != j} (p - x_k) / (x_j - x_k)`.
fn anchor_weight(xs: &[f64], p: f64, j: usize) -> f64 {
    let mut w = p / xs[j];
    for (k, &xk) in xs.iter().enumerate() {
        if k != j {
            w *= (p - xk) / (xs[j] - xk);
        }
    }
    w
}

#[test]
fn entropy_spot_values() {
    assert_abs_diff_eq!(gaussian_entropy_bits(10.0).unwrap(), 3.7080, epsilon = 1e-3);
    assert_abs_diff_eq!(gaussian_entropy_bits(1.0).unwrap(), 2.0471, epsilon = 1e-4);
    let unit = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E);
    assert_abs_diff_eq!(gaussian_entropy_bits(unit).unwrap(), 0.0, epsilon = 1e-12);
    assert!(gaussian_entropy_bits(0.0).is_err());
    assert!(gaussian_entropy_bits(-1.0).is_err());
}

#[test]
fn one_percent_signal_leaks_under_a_hundredth_of_a_bit() {
    assert_abs_diff_eq!(snr_bits(0.01), 0.00718, epsilon = 1e-4);
    // domain {1, 2}, anchor at 1: the share at 2 is -S + 2 Y
    let m = model(vec![1.0, 2.0], 1, 25.0, 1.0, vec![1.0]);
    assert_abs_diff_eq!(m.secret_weight(2.0), -1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(m.per_share_bound(2.0).unwrap(), 0.00718, epsilon = 1e-4);
}

#[test]
fn noise_variance_of_the_three_party_example() {
    let m = model(vec![1.0, 2.0, 3.0], 2, 100.0, 1.0, vec![1.0, 3.0]);
    assert_abs_diff_eq!(m.sigma2_b(2.0), 100.0 * (1.0 + 1.0 / 9.0), epsilon = 1e-9);
    let oracle: f64 = (0..2)
        .map(|j| anchor_weight(&[1.0, 3.0], 2.0, j).powi(2))
        .sum::<f64>()
        * 100.0;
    assert_abs_diff_eq!(m.sigma2_b(2.0), oracle, epsilon = 1e-9);
    let expected = 0.5 * (1.0f64 + (1.0 / 9.0) / (100.0 + 100.0 / 9.0)).log2();
    assert_abs_diff_eq!(m.per_share_bound(2.0).unwrap(), expected, epsilon = 1e-12);
    assert_abs_diff_eq!(expected, 7.2e-4, epsilon = 1e-5);
}

#[test]
fn noise_variance_matches_the_anchor_weight_form() {
    let m = grid_model(37.0, &EXAMPLE_WITNESS);
    let xs = m.witness_xs().to_vec();
    for &i in &EXAMPLE_VIEW {
        let p = m.domain().point(i);
        let oracle: f64 = (0..5)
            .map(|j| anchor_weight(&xs, p, j).powi(2))
            .sum::<f64>()
            * 37.0;
        assert_abs_diff_eq!(m.sigma2_b(p), oracle, epsilon = 1e-9 * oracle);
    }
}

#[test]
fn anchor_points_leak_nothing() {
    let m = grid_model(10.0, &EXAMPLE_WITNESS);
    for &i in &EXAMPLE_WITNESS {
        let p = m.domain().point(i);
        assert_eq!(m.sigma2_b(p), 10.0);
        assert_eq!(m.per_share_bound(p).unwrap(), 0.0);
    }
    assert_eq!(m.t_share_bound(&EXAMPLE_WITNESS).unwrap(), 0.0);
}

#[test]
fn noise_free_shares_leak_without_bound() {
    let m = grid_model(0.0, &EXAMPLE_WITNESS);
    assert_eq!(m.sigma2_b(0.8), 0.0);
    assert!(matches!(
        m.per_share_bound(0.8),
        Err(Error::InfiniteLeak(_))
    ));
    assert!(matches!(
        m.t_share_bound(&[2, 4]),
        Err(Error::InfiniteLeak(_))
    ));
}

#[test]
fn too_many_observed_shares_are_rejected() {
    let m = grid_model(10.0, &EXAMPLE_WITNESS);
    assert!(m.t_share_bound(&[0, 1, 2, 3, 4, 5]).is_err());
}

#[test]
fn infinite_mask_adds_nothing_to_multiplication() {
    let m = grid_model(50.0, &EXAMPLE_WITNESS);
    let base = m.t_share_bound(&EXAMPLE_VIEW).unwrap();
    let masked = m.mult_transcript_bound(&EXAMPLE_VIEW, 1e12).unwrap();
    assert!(masked >= base);
    assert_abs_diff_eq!(masked, base, epsilon = 1e-9);
}

#[test]
fn multiplication_transcript_includes_the_masked_secret() {
    let d = Arc::new(EvaluationDomain::grid(11, 5).unwrap());
    let worst = WorstCaseSearch::new(d.clone(), 101.0, 1.0, Quantity::TSharesPlusMask)
        .run(Execution::Sequential)
        .unwrap();
    // the opened S + R1 alone carries this much
    let alone = snr_bits(1.0 / 101.0);
    assert_abs_diff_eq!(alone, 7.1e-3, epsilon = 1e-4);
    assert!(worst.bits >= alone);
    for view in (0..11).combinations(5).take(40) {
        let m = grid_model(101.0, &EXAMPLE_WITNESS);
        assert!(m.mult_transcript_bound(&view, 101.0).unwrap() >= alone - 1e-12);
    }
}

#[test]
fn zero_mean_inversion_transcript_reduces_to_shares() {
    let m = grid_model(20.0, &EXAMPLE_WITNESS);
    let a = m.inv_transcript_bound(&EXAMPLE_VIEW, 20.0).unwrap();
    let b = m.t_share_bound(&EXAMPLE_VIEW).unwrap();
    assert_abs_diff_eq!(a, b, epsilon = 1e-9);
    assert!(matches!(
        m.inv_transcript_bound(&EXAMPLE_VIEW, 0.0),
        Err(Error::InfiniteLeak(_))
    ));
    let shifted = m
        .clone()
        .with_secret_mean(3.0)
        .inv_transcript_bound_with_mean(&EXAMPLE_VIEW, 2.0, 20.0)
        .unwrap();
    assert!(shifted > b);
}

#[test]
fn product_is_uncorrelated_with_shares_under_zero_means() {
    // moment algebra on simulated samples: cov(S R, S L0 + B) = 0
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut acc = CovarianceAccumulator::new(2);
    let l0 = -0.7;
    for _ in 0..200_000 {
        let s: f64 = StandardNormal.sample(&mut rng);
        let r: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        acc.push(&[s * r * 3.0, s * l0 + b * 2.0]);
    }
    let c = acc.covariance();
    assert!(c[(0, 1)].abs() < 0.05, "{}", c[(0, 1)]);
    assert_abs_diff_eq!(c[(0, 0)], 9.0, epsilon = 0.3);
}

#[test]
fn naive_scheme_spot_values() {
    let at_one = naive_scheme_bound(1.0, &[100.0, 100.0], 1.0).unwrap();
    assert_abs_diff_eq!(at_one, 0.5 * (1.0f64 + 1.0 / 200.0).log2(), epsilon = 1e-12);
    assert_abs_diff_eq!(at_one, 3.60e-3, epsilon = 1e-5);
    let at_three = naive_scheme_bound(1.0, &[100.0, 100.0], 3.0).unwrap();
    assert_abs_diff_eq!(
        at_three,
        0.5 * (1.0f64 + 1.0 / 9000.0).log2(),
        epsilon = 1e-12
    );
    assert_abs_diff_eq!(at_three, 8.0e-5, epsilon = 1e-6);
    assert!(at_three < at_one);
    assert_eq!(naive_scheme_bound(0.0, &[100.0, 100.0], 1.0).unwrap(), 0.0);
}

#[test]
fn eigen_bound_on_two_shares_matches_closed_form_eigenvalues() {
    let m = model(vec![0.5, 1.0, 1.5, 2.0], 2, 7.0, 1.0, vec![0.5, 2.0]);
    let view = [1, 2];
    let c = m.noise_covariance(&view);
    let (a, b, d) = (c[(0, 0)], c[(0, 1)], c[(1, 1)]);
    let mid = 0.5 * (a + d);
    let rad = (0.25 * (a - d).powi(2) + b * b).sqrt();
    let (lo, hi) = (mid - rad, mid + rad);
    let l = m.signal_vector(&view);
    let lambda_a = l.norm_squared();
    let expected = 0.5 * (lambda_a / lo + hi / lo).log2();
    assert_abs_diff_eq!(m.eigen_bound(&view).unwrap(), expected, epsilon = 1e-9);
}

#[test]
fn eigen_bound_signal_term_scales_inversely_with_noise() {
    let view = [1, 2];
    let a = model(vec![0.5, 1.0, 1.5, 2.0], 2, 7.0, 1.0, vec![0.5, 2.0]);
    let b = model(vec![0.5, 1.0, 1.5, 2.0], 2, 70.0, 1.0, vec![0.5, 2.0]);
    // recover the signal term from the bound
    let signal_term = |m: &LeakageModel| {
        let eig = m.noise_covariance(&view).symmetric_eigenvalues();
        (2.0 * m.eigen_bound(&view).unwrap()).exp2() - eig.max() / eig.min()
    };
    assert_abs_diff_eq!(signal_term(&a) / signal_term(&b), 10.0, epsilon = 1e-6);
}

#[test]
fn asymptotic_privacy_on_the_worked_example() {
    let m = grid_model(1e6, &EXAMPLE_WITNESS);
    for view in (0..11).combinations(5) {
        assert!(m.t_share_bound(&view).unwrap() < 1e-4);
    }
}

#[test]
fn plug_in_estimator_on_independent_data() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let n = 100_000;
    let t = 5;
    let mut acc = CovarianceAccumulator::new(1 + t);
    let mut v = vec![0.0; 1 + t];
    for _ in 0..n {
        for x in v.iter_mut() {
            *x = StandardNormal.sample(&mut rng);
        }
        acc.push(&v);
    }
    let (bits, singular) = gaussian_mi_bits(&acc.covariance(), 1);
    assert!(!singular);
    assert!(bits < 2.0 / (n as f64).sqrt() * t as f64, "{bits}");
}

#[test]
fn plug_in_estimator_recovers_half_a_bit() {
    // correlation with rho^2 = 1/2 gives exactly 0.5 bits
    let rho = 0.5f64.sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(10);
    let mut acc = CovarianceAccumulator::new(2);
    for _ in 0..100_000 {
        let x: f64 = StandardNormal.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        acc.push(&[x, rho * x + (1.0 - rho * rho).sqrt() * z]);
    }
    let (bits, _) = gaussian_mi_bits(&acc.covariance(), 1);
    assert_abs_diff_eq!(bits, 0.5, epsilon = 0.02);
}

fn fixed_spec(quantity: Quantity, sigma2_y: f64) -> SampleSpec {
    let d = Arc::new(EvaluationDomain::grid(11, 5).unwrap());
    let mut spec = SampleSpec::new(d.clone(), sigma2_y, quantity);
    spec.witness = WitnessMode::Fixed(EXAMPLE_WITNESS.iter().map(|&i| d.point(i)).collect());
    spec.observed = EXAMPLE_VIEW.to_vec();
    spec.seed = 77;
    spec
}

#[test]
fn fixed_anchor_estimates_track_the_bounds() {
    let sigma2_y = 5000.0;
    let m = grid_model(sigma2_y, &EXAMPLE_WITNESS);
    let cases = [
        (Quantity::TShares, m.t_share_bound(&EXAMPLE_VIEW).unwrap()),
        (
            Quantity::TSharesPlusMask,
            m.mult_transcript_bound(&EXAMPLE_VIEW, sigma2_y).unwrap(),
        ),
        (
            Quantity::TSharesPlusProduct,
            m.inv_transcript_bound(&EXAMPLE_VIEW, sigma2_y).unwrap(),
        ),
    ];
    for (q, bound) in cases {
        let est = empirical_mi(&fixed_spec(q, sigma2_y), Execution::Sequential).unwrap();
        assert!(
            (est.corrected_bits() - bound).abs() < 3e-3,
            "{q:?}: estimate {} bound {bound}",
            est.bits
        );
    }
}

#[test]
fn single_anchor_share_is_independent() {
    let d = Arc::new(EvaluationDomain::grid(11, 5).unwrap());
    let mut spec = fixed_spec(Quantity::SingleShare, 1.0);
    spec.observed = vec![EXAMPLE_WITNESS[2]];
    spec.domain = d;
    let est = empirical_mi(&spec, Execution::Sequential).unwrap();
    assert!(est.bits <= 0.01, "{}", est.bits);
}

#[test]
fn estimates_do_not_depend_on_execution_mode() {
    let d = Arc::new(EvaluationDomain::grid(7, 3).unwrap());
    let mut spec = SampleSpec::new(d, 10.0, Quantity::TSharesPlusMask);
    spec.samples = 20_000;
    let modes = Execution::available();
    let first = empirical_mi(&spec, modes[0]).unwrap();
    for m in modes {
        assert_eq!(empirical_mi(&spec, m).unwrap(), first);
    }
}

#[test]
fn worst_case_search_is_deterministic() {
    let d = Arc::new(EvaluationDomain::grid(9, 4).unwrap());
    let search = WorstCaseSearch::new(d, 30.0, 1.0, Quantity::TShares);
    let a = search.run(Execution::Sequential).unwrap();
    for m in Execution::available() {
        assert_eq!(search.run(m).unwrap(), a);
    }
    assert!(a.exhaustive);
    assert_eq!(a.witnesses_examined, 126);
}

fn instance() -> impl Strategy<Value = (usize, usize, Vec<usize>, Vec<usize>, f64, f64)> {
    (4usize..=11)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, t)| {
            (
                Just(n),
                Just(t),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
                1usize..=t,
                0.5f64..2000.0,
                0.1f64..10.0,
            )
        })
        .prop_map(|(n, t, w, v, k, sy, ss)| (n, t, w[..t].to_vec(), v[..k].to_vec(), sy, ss))
}

fn instance_model(
    n: usize,
    t: usize,
    witness: &[usize],
    sigma2_y: f64,
    sigma2_s: f64,
) -> LeakageModel {
    let d = Arc::new(EvaluationDomain::grid(n, t).unwrap());
    let xs = witness.iter().map(|&i| d.point(i)).collect();
    LeakageModel::new(
        d,
        &SharingParams::new(0.0, sigma2_y, 0).unwrap(),
        sigma2_s,
        xs,
    )
    .unwrap()
}

fn noisy(m: &LeakageModel, view: &[usize]) -> bool {
    m.noise_covariance(view).symmetric_eigenvalues().min() > 1e-9 * m.sigma2_y()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn determinant_ratio_never_exceeds_eigen_bound((n, t, w, v, sy, ss) in instance()) {
        let m = instance_model(n, t, &w, sy, ss);
        prop_assume!(noisy(&m, &v));
        let det = m.t_share_bound(&v).unwrap();
        let eig = m.eigen_bound(&v).unwrap();
        prop_assert!(det <= eig + 1e-9, "det {det} eigen {eig}");
    }

    #[test]
    fn determinant_lemma_agrees((n, t, w, v, sy, ss) in instance()) {
        let m = instance_model(n, t, &w, sy, ss);
        prop_assume!(noisy(&m, &v));
        let l = m.signal_vector(&v);
        let c = m.noise_covariance(&v);
        let inv = c.clone().cholesky().unwrap().inverse();
        let quad = (l.transpose() * inv * &l)[(0, 0)];
        let lemma = 0.5 * (1.0 + ss * quad).log2();
        let got = m.t_share_bound(&v).unwrap();
        prop_assert!((got - lemma).abs() <= 1e-6 * lemma.max(1.0), "{got} vs {lemma}");
    }

    #[test]
    fn joint_bound_decreases_with_noise((n, t, w, v, sy, ss) in instance(), factor in 1.0f64..100.0) {
        let a = instance_model(n, t, &w, sy, ss);
        prop_assume!(noisy(&a, &v));
        let b = instance_model(n, t, &w, sy * factor, ss);
        prop_assert!(b.t_share_bound(&v).unwrap() <= a.t_share_bound(&v).unwrap() * (1.0 + 1e-9) + 1e-15);
    }

    #[test]
    fn joint_bound_dominates_each_share((n, t, w, v, sy, ss) in instance()) {
        let m = instance_model(n, t, &w, sy, ss);
        prop_assume!(noisy(&m, &v));
        let joint = m.t_share_bound(&v).unwrap();
        for &i in &v {
            let single = m.per_share_bound(m.domain().point(i)).unwrap();
            prop_assert!(joint + 1e-9 >= single, "{joint} < {single}");
        }
    }

    #[test]
    fn per_share_bound_ignores_anchor_order((n, t, w, _v, sy, ss) in instance(), p in 0usize..11) {
        let p = p % n;
        let a = instance_model(n, t, &w, sy, ss);
        let mut rev = w.clone();
        rev.reverse();
        let b = instance_model(n, t, &rev, sy, ss);
        let x = a.domain().point(p);
        let (ba, bb) = (a.per_share_bound(x).unwrap(), b.per_share_bound(x).unwrap());
        prop_assert!((ba - bb).abs() <= 1e-9 * ba.max(1e-12));
        if w.contains(&p) {
            prop_assert_eq!(ba, 0.0);
        }
    }
}

#[test]
fn covariance_helpers_are_consistent() {
    let m = grid_model(3.0, &EXAMPLE_WITNESS);
    let s = m.signal_covariance(&EXAMPLE_VIEW);
    let l = m.signal_vector(&EXAMPLE_VIEW);
    assert!((s - &l * l.transpose()).amax() < 1e-12);
    let c = m.noise_covariance(&EXAMPLE_VIEW);
    assert!((c.clone() - c.transpose()).amax() < 1e-12);
}
