mod common;

use common::{max_abs_diff, normal_equations_fit, random_orthogonal};
use easmh::linalg::{dot, norm, Matrix};
use easmh::subspace::{
    construct_linear_regression, detect_spectral_gap, draw_points, gradient_covariance_from_points,
    linear_regression_from_points, posterior_covariance_from_points, ActiveDim,
};
use easmh::targets::{make_mixture_experiment_target, Gaussian, MixtureVariant, Shifted};
use easmh::{ActiveSubspace, DensityModel, StreamKey};
use proptest::prelude::*;

fn check_orthonormal(s: &ActiveSubspace) -> Result<(), TestCaseError> {
    let full = s.active_basis().hstack(s.inactive_basis()).unwrap();
    prop_assert!(full.gram().identity_deviation() <= 1e-10);
    prop_assert!(s.active_dim() >= 1 && s.active_dim() < s.ambient_dim());
    Ok(())
}

fn points(m: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    draw_points(&Gaussian::standard(m), count, StreamKey::root(seed)).unwrap()
}

fn rotate(q: &Matrix, x: &[f64]) -> Vec<f64> {
    q.mul_vec(x)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_covariance_bases_are_orthonormal(m in 2usize..12, seed in any::<u64>()) {
        let q = random_orthogonal(m, seed);
        let s = gradient_covariance_from_points(|x: &[f64]| Some(q.mul_vec(x)), &points(m, 30, seed), ActiveDim::Detect)
            .unwrap();
        check_orthonormal(&s)?;
    }

    #[test]
    fn posterior_covariance_bases_are_orthonormal(m in 2usize..8, seed in any::<u64>()) {
        let variances: Vec<f64> = (0..m).map(|i| 0.2 + i as f64).collect();
        let target = Gaussian::diagonal(vec![0.5; m], variances).unwrap();
        let prior = Gaussian::isotropic(vec![0.0; m], 4.0).unwrap();
        let pts = draw_points(&prior, 200, StreamKey::root(seed)).unwrap();
        let fit = posterior_covariance_from_points(&target, &prior, &pts, ActiveDim::Detect).unwrap();
        check_orthonormal(&fit.subspace)?;
    }

    #[test]
    fn regression_bases_are_orthonormal(m in 2usize..10, seed in any::<u64>()) {
        let q = random_orthogonal(m, seed);
        let a = q.column(0);
        let s = linear_regression_from_points(|x: &[f64]| (dot(&a, x) + 10.0).max(0.0), &points(m, 50, seed)).unwrap();
        check_orthonormal(&s)?;
        prop_assert_eq!(s.active_dim(), 1);
        prop_assert!((dot(&s.active_basis().column(0), &a).abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gradient_covariance_is_rotation_equivariant(m in 3usize..8, k in 1usize..3, seed in any::<u64>()) {
        let k = k.min(m - 1);
        let weights: Vec<f64> = (0..m).map(|i| 4.0 / (1 + i) as f64).collect();
        let field = |x: &[f64]| Some(x.iter().zip(&weights).map(|(v, w)| v * w).collect::<Vec<_>>());
        let pts = points(m, 400, seed);
        let base = gradient_covariance_from_points(field, &pts, ActiveDim::Fixed(k)).unwrap();

        let q = random_orthogonal(m, seed ^ 0x5eed);
        let qt = q.transpose();
        let rotated_pts: Vec<Vec<f64>> = pts.iter().map(|p| rotate(&q, p)).collect();
        let rotated_field = |x: &[f64]| field(&qt.mul_vec(x)).map(|g| q.mul_vec(&g));
        let rotated = gradient_covariance_from_points(rotated_field, &rotated_pts, ActiveDim::Fixed(k)).unwrap();

        let expect = q.matmul(&base.active_projector()).unwrap().matmul(&qt).unwrap();
        prop_assert!(max_abs_diff(&rotated.active_projector(), &expect) <= 1e-6);
    }

    #[test]
    fn spectral_gap_ignores_eigenvalue_scale(
        mut eigs in prop::collection::vec(0.0f64..100.0, 2..20),
        scale in 1e-6f64..1e6,
        cap in prop::option::of(1usize..5),
    ) {
        eigs.sort_by(|a, b| b.total_cmp(a));
        let scaled: Vec<f64> = eigs.iter().map(|e| e * scale).collect();
        let a = detect_spectral_gap(&eigs, cap).unwrap();
        let b = detect_spectral_gap(&scaled, cap).unwrap();
        prop_assert_eq!(a.cut_index, b.cut_index);
        prop_assert!((a.gap_ratio - b.gap_ratio).abs() <= 1e-9 * a.gap_ratio);
    }

    #[test]
    fn posterior_covariance_ignores_target_scale(seed in any::<u64>(), log_scale in -200.0f64..200.0) {
        let cov = Matrix::from_rows(&[vec![2.0, 0.6, 0.0], vec![0.6, 1.0, 0.1], vec![0.0, 0.1, 0.05]]).unwrap();
        let target = Gaussian::new(vec![0.3, -0.2, 0.1], cov).unwrap();
        let prior = Gaussian::isotropic(vec![0.0; 3], 4.0).unwrap();
        let pts = draw_points(&prior, 300, StreamKey::root(seed)).unwrap();
        let a = posterior_covariance_from_points(&target, &prior, &pts, ActiveDim::Detect).unwrap();
        let shifted = Shifted { inner: target.clone(), log_scale };
        let b = posterior_covariance_from_points(&shifted, &prior, &pts, ActiveDim::Detect).unwrap();
        prop_assert_eq!(a.subspace.active_dim(), b.subspace.active_dim());
        prop_assert!(max_abs_diff(&a.subspace.active_projector(), &b.subspace.active_projector()) <= 1e-10);
        for (x, y) in a.mean.iter().zip(&b.mean) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        prop_assert!((a.effective_sample_size - b.effective_sample_size).abs() <= 1e-8 * a.effective_sample_size);
    }
}

#[test]
fn mixture_regression_matches_independent_fit() {
    let target = make_mixture_experiment_target(MixtureVariant::TwoD);
    let sampler = Gaussian::isotropic(vec![0.0, 0.0], 10.0).unwrap();
    for seed in 0..5 {
        let stream = StreamKey::root(seed);
        let s = construct_linear_regression(&target, &sampler, 500, stream).unwrap();
        let pts = draw_points(&sampler, 500, stream).unwrap();
        let values: Vec<f64> = pts.iter().map(|x| target.log_density(x).exp()).collect();
        let oracle = normal_equations_fit(&pts, &values);
        let slope = &oracle[1..];
        let cos = dot(&s.active_basis().column(0), slope).abs() / norm(slope);
        assert!((cos - 1.0).abs() < 1e-8, "seed {seed}: cos {cos}");
    }
}
