mod common;

use common::normal_draws;
use easmh::diagnostics::{
    autocorrelation, effective_sample_size, gaussian_kde, ks_critical_value_1pct, ks_statistic, mode_occupancy, Axis,
    Bandwidth,
};
use easmh::StreamKey;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn random_chain(len: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut prev = vec![0.0; dim];
    normal_draws(len * dim, StreamKey::root(seed))
        .chunks(dim)
        .map(|e| {
            for (p, v) in prev.iter_mut().zip(e) {
                *p = 0.7 * *p + v;
            }
            prev.clone()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn autocorrelation_is_affine_invariant(
        seed in any::<u64>(),
        scales in prop::collection::vec(prop_oneof![0.001f64..1000.0, -1000.0f64..-0.001], 3),
        shifts in prop::collection::vec(-1e3f64..1e3, 3),
    ) {
        let chain = random_chain(500, 3, seed);
        let mapped: Vec<Vec<f64>> = chain
            .iter()
            .map(|x| x.iter().zip(&scales).zip(&shifts).map(|((v, a), b)| a * v + b).collect())
            .collect();
        let a = autocorrelation(&chain, 20).unwrap();
        let b = autocorrelation(&mapped, 20).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn kde_is_nonnegative_and_ignores_sample_order(seed in any::<u64>(), rotate_by in 1usize..50, n in 2usize..60) {
        let raw = normal_draws(2 * n, StreamKey::root(seed));
        let points: Vec<Vec<f64>> = raw.chunks(2).map(<[f64]>::to_vec).collect();
        let mut relabeled = points.clone();
        relabeled.rotate_left(rotate_by % n);
        relabeled.reverse();
        let weights = vec![0.5; n];
        let axes = [Axis::new(-4.0, 4.0, 41).unwrap(), Axis::new(-4.0, 4.0, 33).unwrap()];
        let a = gaussian_kde(&points, &weights, &axes, &Bandwidth::Scott).unwrap();
        let b = gaussian_kde(&relabeled, &weights, &axes, &Bandwidth::Scott).unwrap();
        prop_assert!(a.density.iter().all(|&d| d >= 0.0));
        let peak = a.density.iter().copied().fold(0.0, f64::max);
        for (x, y) in a.density.iter().zip(&b.density) {
            prop_assert!((x - y).abs() <= 1e-12 * peak.max(1.0));
        }
    }

    #[test]
    fn occupancy_fractions_sum_to_one(
        points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..100),
        weights in prop::collection::vec(1e-6f64..10.0, 100),
    ) {
        let centers = vec![vec![2.0, 2.0], vec![-2.0, -2.0], vec![0.0, 3.0]];
        let f = mode_occupancy(&points, &weights[..points.len()], &centers).unwrap();
        prop_assert!(f.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((f.iter().sum::<f64>() - 1.0).abs() <= 4.0 * f64::EPSILON);
    }
}

#[test]
fn iid_ess_is_close_to_chain_length() {
    for seed in 0..5 {
        let chain: Vec<Vec<f64>> = normal_draws(20_000, StreamKey::root(seed)).chunks(2).map(<[f64]>::to_vec).collect();
        for ess in effective_sample_size(&chain).unwrap() {
            assert!((ess / chain.len() as f64 - 1.0).abs() < 0.15, "seed {seed}: ess {ess}");
        }
    }
}

#[test]
fn ar1_autocorrelation_decays_geometrically() {
    let chain = random_chain(200_000, 1, 3);
    let curve = autocorrelation(&chain, 10).unwrap();
    for k in 1..=10 {
        assert!((curve.values[k] - 0.7f64.powi(k as i32)).abs() < 0.02, "lag {k}");
    }
}

#[test]
fn ks_accepts_exact_draws_and_rejects_shifted_ones() {
    let draws = normal_draws(5000, StreamKey::root(8));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let cdf = |x: f64| normal.cdf(x);
    assert!(ks_statistic(&draws, cdf) < ks_critical_value_1pct(draws.len()));
    let shifted: Vec<f64> = draws.iter().map(|x| x + 0.2).collect();
    assert!(ks_statistic(&shifted, cdf) > ks_critical_value_1pct(draws.len()));
}
