use easmh::ode::{generate_lorenz96_data, integrate, lorenz96_rhs, Lorenz96Params};
use easmh::rng::stage;
use easmh::StreamKey;
use proptest::prelude::*;

fn params(k: usize, forcing: f64) -> Lorenz96Params {
    Lorenz96Params::single_scale(k, forcing).unwrap()
}

fn shift(x: &[f64], by: usize) -> Vec<f64> {
    let k = x.len();
    (0..k).map(|i| x[(i + k - by) % k]).collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn advection_term_conserves_energy(x in prop::collection::vec(-20.0f64..20.0, 4..40), forcing in -10.0f64..10.0) {
        let p = params(x.len(), forcing);
        let dx = lorenz96_rhs(&p, &x).unwrap();
        let power: f64 = x.iter().zip(&dx).map(|(a, b)| a * b).sum();
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let expect = -sq + forcing * x.iter().sum::<f64>();
        prop_assert!((power - expect).abs() <= 1e-10 * sq.max(1.0) * 20.0);
    }

    #[test]
    fn cyclic_shift_equivariance(x in prop::collection::vec(-5.0f64..12.0, 4..12), by in 1usize..4) {
        let p = params(x.len(), 8.0);
        let shifted = shift(&x, by);
        prop_assert_eq!(lorenz96_rhs(&p, &shifted).unwrap(), shift(&lorenz96_rhs(&p, &x).unwrap(), by));
        let a = integrate(&p, &x, 0.0, 0.5, 0.01).unwrap();
        let b = integrate(&p, &shifted, 0.0, 0.5, 0.01).unwrap();
        prop_assert_eq!(a.diverged, b.diverged);
        for (sa, sb) in a.states.iter().zip(&b.states) {
            prop_assert!(distance(&shift(sa, by), sb) <= 1e-12 * (1.0 + sa.iter().map(|v| v.abs()).sum::<f64>()));
        }
    }
}

#[test]
fn homogeneous_forcing_state_is_preserved() {
    for k in [4, 8, 36] {
        let traj = integrate(&params(k, 8.0), &vec![8.0; k], 0.0, 10.0, 0.01).unwrap();
        assert_eq!(traj.states.len(), 1001);
        assert!(traj.states.iter().all(|s| s.iter().all(|&v| v == 8.0)));
    }
}

#[test]
fn rk4_step_halving_ratio() {
    let p = params(8, 8.0);
    let x0: Vec<f64> = (0..8).map(|k| 8.0 + 0.1 * (k as f64).sin()).collect();
    let end = |h: f64| integrate(&p, &x0, 0.0, 1.0, h).unwrap().last().unwrap().to_vec();
    let (a, b, c) = (end(0.02), end(0.01), end(0.005));
    let ratio = distance(&a, &b) / distance(&b, &c);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn observation_noise_has_requested_variance() {
    let p = params(36, 8.0);
    let truth: Vec<f64> = (0..36).map(|k| 8.0 + (k as f64 * 0.7).cos()).collect();
    let stream = StreamKey::root(42).child(stage::DATA);
    let data = generate_lorenz96_data(&p, &truth, 0.0, 10.0, 0.01, 0.1, stream).unwrap();
    let clean = integrate(&p, &truth, 0.0, 10.0, 0.01).unwrap();
    assert_eq!(data.n_times(), 1000);
    assert_eq!(data.times, clean.times[1..].to_vec());
    let residuals: Vec<f64> = data
        .values
        .iter()
        .zip(&clean.states[1..])
        .flat_map(|(o, s)| o.iter().zip(s).map(|(a, b)| a - b).collect::<Vec<_>>())
        .collect();
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((var / 0.1 - 1.0).abs() < 0.1, "variance {var}");

    let again = generate_lorenz96_data(&p, &truth, 0.0, 10.0, 0.01, 0.1, stream).unwrap();
    assert_eq!(again, data);
    let other = generate_lorenz96_data(&p, &truth, 0.0, 10.0, 0.01, 0.1, StreamKey::root(43).child(stage::DATA)).unwrap();
    assert_ne!(other, data);
}
