use std::sync::Arc;

use approx::assert_abs_diff_eq;
use itertools::Itertools;
use proptest::prelude::*;
use rnss::{
    lagrange_basis, naive_share, naive_share_with_coefficients, recon, recon_points, recon_with,
    share, share_with_witness, AnchorWitness, EvaluationDomain, InterpolationForm, ReconMode,
    ShareSet, SharingParams,
};

/// Neville's scheme evaluated at 0. Independent of the library's interpolation.
fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = ((0.0 - xj) * p[i] + (xi - 0.0) * p[i + 1]) / (xi - xj);
        }
    }
    p[0]
}

fn brute_basis(nodes: &[f64], x: f64, j: usize) -> f64 {
    let mut num = 1.0;
    let mut den = 1.0;
    for (k, &xk) in nodes.iter().enumerate() {
        if k != j {
            num *= x - xk;
            den *= nodes[j] - xk;
        }
    }
    num / den
}

fn paper_domain() -> Arc<EvaluationDomain> {
    Arc::new(
        EvaluationDomain::new(
            vec![0.5, 0.65, 0.8, 0.95, 1.1, 1.25, 1.4, 1.55, 1.7, 1.85, 2.0],
            5,
        )
        .unwrap(),
    )
}

const EXAMPLE_SHARES: [f64; 11] = [
    -466.5063877128687,
    393.6467938982267,
    747.0755365655176,
    602.6532621019152,
    163.2055872535697,
    -280.78744305822966,
    -457.4891224952931,
    -220.00385006059514,
    347.3251031434767,
    822.6178271571639,
    340.1600064050799,
];

#[test]
fn basis_at_two_through_zero_one_three() {
    let v = lagrange_basis(&[0.0, 1.0, 3.0], 2.0, 0).unwrap();
    assert_abs_diff_eq!(v, -1.0 / 3.0, epsilon = 1e-15);
    assert_eq!(lagrange_basis(&[0.0, 1.0], 0.0, 0).unwrap(), 1.0);
}

#[test]
fn basis_matches_brute_product() {
    let nodes = [0.0, 0.5, 0.65, 0.95, 1.4, 2.0];
    for j in 0..nodes.len() {
        let got = lagrange_basis(&nodes, 0.8, j).unwrap();
        assert_abs_diff_eq!(got, brute_basis(&nodes, 0.8, j), epsilon = 1e-12);
    }
}

#[test]
fn basis_rejects_duplicate_nodes() {
    assert_eq!(
        lagrange_basis(&[0.0, 1.0, 1.0], 2.0, 0),
        Err(rnss::Error::DegenerateNodes)
    );
}

#[test]
fn worked_example_share_at_point_eight() {
    let d = paper_domain();
    let w = AnchorWitness {
        xs: vec![0.5, 0.65, 0.95, 1.4, 2.0],
        ys: vec![
            EXAMPLE_SHARES[0],
            EXAMPLE_SHARES[1],
            EXAMPLE_SHARES[3],
            EXAMPLE_SHARES[6],
            EXAMPLE_SHARES[10],
        ],
    };
    let shares = share_with_witness(5.0, &d, &w).unwrap();
    assert_abs_diff_eq!(
        shares.at_point(0.8).unwrap(),
        747.0755365655,
        epsilon = 1e-6
    );
    for (i, expected) in EXAMPLE_SHARES.iter().enumerate() {
        assert_abs_diff_eq!(shares.get(i).unwrap(), expected, epsilon = 1e-6);
    }
    for (x, y) in w.xs.iter().zip(&w.ys) {
        assert_eq!(shares.at_point(*x).unwrap().to_bits(), y.to_bits());
    }
}

#[test]
fn worked_example_reconstructs_five() {
    let d = paper_domain();
    let shares = ShareSet::from_values(d, EXAMPLE_SHARES.to_vec()).unwrap();
    // the printed shares carry about 1e-9 of rounding in the secret
    assert_abs_diff_eq!(recon(&shares).unwrap(), 5.0, epsilon = 1e-8);
    assert_abs_diff_eq!(
        recon_with(&shares, ReconMode::All, InterpolationForm::Barycentric).unwrap(),
        5.0,
        epsilon = 1e-6
    );
}

#[test]
fn three_party_expansion() {
    let d = Arc::new(EvaluationDomain::new(vec![1.0, 2.0, 3.0], 2).unwrap());
    let (s, y1, y2) = (4.0, 7.0, -2.0);
    let w = AnchorWitness {
        xs: vec![1.0, 3.0],
        ys: vec![y1, y2],
    };
    let shares = share_with_witness(s, &d, &w).unwrap();
    assert_eq!(shares.get(0), Some(y1));
    assert_eq!(shares.get(2), Some(y2));
    assert_abs_diff_eq!(
        shares.get(1).unwrap(),
        -s / 3.0 + y1 + y2 / 3.0,
        epsilon = 1e-12
    );
}

#[test]
fn noise_free_shares_scale_the_secret_basis() {
    let d = paper_domain();
    let params = SharingParams::new(0.0, 0.0, 4).unwrap();
    let (shares, w) = share(3.25, &d, &params).unwrap();
    assert!(w.ys.iter().all(|&y| y == 0.0));
    let mut nodes = vec![0.0];
    nodes.extend(&w.xs);
    for (i, v) in shares.iter() {
        assert_abs_diff_eq!(
            v,
            3.25 * brute_basis(&nodes, d.point(i), 0),
            epsilon = 1e-12
        );
    }
    assert_abs_diff_eq!(recon(&shares).unwrap(), 3.25, epsilon = 1e-12);
}

#[test]
fn too_few_shares_is_an_error() {
    let d = paper_domain();
    let (shares, _) = share(1.0, &d, &SharingParams::new(0.0, 1.0, 0).unwrap()).unwrap();
    let partial = shares.subset(&[0, 1, 2, 3, 4]).unwrap();
    assert_eq!(
        recon(&partial),
        Err(rnss::Error::InsufficientShares { needed: 6, got: 5 })
    );
}

#[test]
fn round_trips_match_neville_oracle() {
    let d = paper_domain();
    for seed in 0..1000u64 {
        let s = (seed as f64 * 0.731).sin() * 50.0;
        let (shares, _) = share(s, &d, &SharingParams::new(0.0, 100.0, seed).unwrap()).unwrap();
        let got = recon(&shares).unwrap();
        let xs: Vec<f64> = d.points()[..6].to_vec();
        let ys: Vec<f64> = (0..6).map(|i| shares.get(i).unwrap()).collect();
        let oracle = neville_at_zero(&xs, &ys);
        assert_abs_diff_eq!(got, oracle, epsilon = 1e-8);
        assert_abs_diff_eq!(got, s, epsilon = 1e-7);
    }
}

#[test]
fn product_form_agrees_with_barycentric() {
    let pairs = [(0.5, 1.0), (1.0, -2.0), (1.5, 0.25), (2.5, 4.0)];
    let a = recon_points(&pairs, InterpolationForm::Barycentric).unwrap();
    let b = recon_points(&pairs, InterpolationForm::Product).unwrap();
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    assert_abs_diff_eq!(a, neville_at_zero(&xs, &ys), epsilon = 1e-12);
}

#[test]
fn naive_shares_are_secret_plus_polynomial() {
    let d = paper_domain();
    let n = naive_share(5.0, &d, &SharingParams::new(0.0, 100.0, 2).unwrap()).unwrap();
    assert_eq!(n.coefficients.len(), 5);
    for (i, v) in n.shares.iter() {
        let p = d.point(i);
        let poly: f64 = n
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| c * p.powi(j as i32 + 1))
            .sum();
        assert_abs_diff_eq!(v - 5.0, poly, epsilon = 1e-9);
    }
    let xs: Vec<f64> = d.points()[..6].to_vec();
    let ys: Vec<f64> = (0..6).map(|i| n.shares.get(i).unwrap()).collect();
    assert_abs_diff_eq!(neville_at_zero(&xs, &ys), 5.0, epsilon = 1e-9);
    assert_abs_diff_eq!(recon(&n.shares).unwrap(), 5.0, epsilon = 1e-9);

    let flat = naive_share_with_coefficients(5.0, &d, vec![0.0; 5]).unwrap();
    assert!(flat.shares.iter().all(|(_, v)| v == 5.0));
}

fn domain_strategy() -> impl Strategy<Value = Arc<EvaluationDomain>> {
    (3usize..=15)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_map(|(n, t)| Arc::new(EvaluationDomain::grid(n, t).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn round_trip_within_tolerance(
        d in domain_strategy(),
        s in -100.0f64..100.0,
        sigma2 in 0.0f64..1000.0,
        seed in any::<u64>(),
    ) {
        let (shares, _) = share(s, &d, &SharingParams::new(0.0, sigma2, seed).unwrap()).unwrap();
        prop_assert!((recon(&shares).unwrap() - s).abs() <= 1e-7);
    }

    #[test]
    fn anchors_are_bit_exact(d in domain_strategy(), s in -100.0f64..100.0, seed in any::<u64>()) {
        let (shares, w) = share(s, &d, &SharingParams::new(0.0, 500.0, seed).unwrap()).unwrap();
        prop_assert_eq!(w.xs.len(), d.t());
        for (x, y) in w.xs.iter().zip(&w.ys) {
            prop_assert_eq!(shares.at_point(*x).unwrap().to_bits(), y.to_bits());
        }
    }

    #[test]
    fn every_minimal_subset_agrees(s in -50.0f64..50.0, seed in any::<u64>()) {
        let d = Arc::new(EvaluationDomain::grid(8, 3).unwrap());
        let (shares, _) = share(s, &d, &SharingParams::new(0.0, 100.0, seed).unwrap()).unwrap();
        let reference = recon(&shares).unwrap();
        for subset in (0..8).combinations(4) {
            let v = recon(&shares.subset(&subset).unwrap()).unwrap();
            prop_assert!((v - reference).abs() <= 1e-6);
        }
    }

    #[test]
    fn witness_shares_ignore_the_secret(a in -50.0f64..50.0, b in -50.0f64..50.0, seed in any::<u64>()) {
        let d = Arc::new(EvaluationDomain::grid(11, 5).unwrap());
        let params = SharingParams::new(0.0, 100.0, seed).unwrap();
        let (x, wa) = share(a, &d, &params).unwrap();
        let (y, wb) = share(b, &d, &params).unwrap();
        prop_assert_eq!(&wa, &wb);
        for p in &wa.xs {
            prop_assert_eq!(x.at_point(*p).unwrap().to_bits(), y.at_point(*p).unwrap().to_bits());
        }
    }

    #[test]
    fn sharing_is_deterministic(d in domain_strategy(), s in -10.0f64..10.0, seed in any::<u64>()) {
        let params = SharingParams::new(1.5, 20.0, seed).unwrap();
        prop_assert_eq!(share(s, &d, &params).unwrap(), share(s, &d, &params).unwrap());
    }
}
