//! End-to-end acceptance checks. Runs every criterion, prints one line each and
//! exits nonzero if any of them fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use easmh::diagnostics::{
    autocorrelation, effective_sample_size, gaussian_kde, ks_critical_value_1pct, ks_statistic,
    mean_with_standard_error, series_ess, thin, Axis, Bandwidth,
};
use easmh::linalg::{complete_orthonormal_basis, symmetric_eigendecompose, Matrix};
use easmh::ode::{integrate, Lorenz96Params};
use easmh::samplers::{estimate_marginal, run_asmh, AsmhOptions, AsmhVariant, InactiveProposal, ProposalSpec};
use easmh::subspace::{gradient_covariance_from_points, ActiveDim};
use easmh::targets::Gaussian;
use easmh::{ActiveSubspace, StreamKey};
use easmh_cli::{parse_config, run_experiment, Reuse, RunConfig, RunReport};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

const SEEDS: u64 = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(text: &str, out: &Path) -> RunConfig {
    let mut cfg = parse_config(text).expect("valid config");
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn run(text: &str, out: &Path) -> RunReport {
    run_experiment(&config(text, out), &Reuse::default()).expect("run succeeds")
}

fn mixture_runs(dir: &Path) -> Vec<(RunReport, RunReport)> {
    (0..SEEDS)
        .map(|seed| {
            let v = run(
                &format!("experiment = \"mixture2d\"\nsampler.mode = \"vanilla\"\nseed = {seed}"),
                &dir.join(format!("v{seed}")),
            );
            let e = run(
                &format!("experiment = \"mixture2d\"\nsampler.mode = \"easmh\"\nseed = {seed}"),
                &dir.join(format!("e{seed}")),
            );
            (v, e)
        })
        .collect()
}

fn acceptance_rates(runs: &[(RunReport, RunReport)]) -> Outcome {
    let n = runs.len() as f64;
    let vanilla = runs.iter().map(|(v, _)| v.chain.acceptance_rate()).sum::<f64>() / n;
    let easmh = runs.iter().map(|(_, e)| e.chain.acceptance_rate()).sum::<f64>() / n;
    let pass = (vanilla - 0.32).abs() <= 0.10 && (easmh - 0.49).abs() <= 0.10;
    outcome(pass, format!("mean acceptance vanilla {vanilla:.3} (0.32 ± 0.10), easmh {easmh:.3} (0.49 ± 0.10)"))
}

fn minority(report: &RunReport) -> f64 {
    let occ = report.occupancy.as_ref().expect("mixture runs report occupancy");
    occ.iter().copied().fold(f64::INFINITY, f64::min)
}

fn bimodality(runs: &[(RunReport, RunReport)]) -> Outcome {
    let easmh_both = runs.iter().filter(|(_, e)| minority(e) >= 0.2).count();
    let vanilla_one = runs.iter().filter(|(v, _)| minority(v) < 0.05).count();
    let n = runs.len();
    let pass = easmh_both * 10 >= n * 8 && vanilla_one * 2 >= n;
    outcome(
        pass,
        format!("easmh minority ≥ 0.2 in {easmh_both}/{n} (need 80%), vanilla minority < 0.05 in {vanilla_one}/{n} (need 50%)"),
    )
}

fn rotated_gaussian_setup() -> (Gaussian, ActiveSubspace) {
    let target = Gaussian::diagonal(vec![0.0, 0.0], vec![1.0, 4.0]).unwrap();
    (target, ActiveSubspace::coordinate(2, 1).unwrap())
}

struct MomentCheck {
    mean: f64,
    mean_se: f64,
    second: f64,
    second_se: f64,
    ys: Vec<f64>,
}

fn y_moments(variant: AsmhVariant, nested: usize, iterations: usize, seed: u64) -> MomentCheck {
    let (target, subspace) = rotated_gaussian_setup();
    let options = AsmhOptions {
        iterations,
        nested_samples: nested,
        variant,
        burn_in: 0,
        inactive_proposal: InactiveProposal::StandardGaussian,
        parallel: false,
    };
    let chain = run_asmh(&target, &subspace, &ProposalSpec::Isotropic(1.0), &[0.0, 0.0], &options, seed).unwrap();
    let ys: Vec<f64> = chain.samples.iter().map(|y| y[0]).collect();
    let squares: Vec<f64> = ys.iter().map(|y| y * y).collect();
    let (mean, mean_se) = mean_with_standard_error(&ys);
    let (second, second_se) = mean_with_standard_error(&squares);
    MomentCheck {
        mean,
        mean_se,
        second,
        second_se,
        ys,
    }
}

fn gimh_exactness() -> Outcome {
    let n = 200_000;
    let m = y_moments(AsmhVariant::Gimh, 2, n, 3);
    let squares: Vec<f64> = m.ys.iter().map(|y| y * y).collect();
    let ess = series_ess(&m.ys).min(series_ess(&squares));
    let k = ((2.0 * n as f64) / ess).ceil().max(1.0) as usize;
    let thinned = thin(&m.ys, k);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let ks = ks_statistic(&thinned, |x| normal.cdf(x));
    let critical = ks_critical_value_1pct(thinned.len());
    let mean_ok = m.mean.abs() <= 3.0 * m.mean_se;
    let second_ok = (m.second - 1.0).abs() <= 3.0 * m.second_se;
    outcome(
        mean_ok && second_ok && ks < critical,
        format!(
            "mean {:.4} ± 3·{:.4}, second moment {:.4} ± 3·{:.4}, KS {:.4} < {:.4} on {} draws (thin {k})",
            m.mean,
            m.mean_se,
            m.second,
            m.second_se,
            ks,
            critical,
            thinned.len()
        ),
    )
}

fn mcwm_bias() -> Outcome {
    let outside = (0..SEEDS)
        .filter(|&seed| {
            let m = y_moments(AsmhVariant::Mcwm, 1, 200_000, 100 + seed);
            (m.second - 1.0).abs() > 3.0 * m.second_se
        })
        .count();
    outcome(
        outside >= 15,
        format!("MCwM second moment outside the exactness band in {outside}/{SEEDS} seeds (need 15)"),
    )
}

fn estimator_unbiasedness() -> Outcome {
    let (target, subspace) = rotated_gaussian_setup();
    let root = StreamKey::root(5);
    let n = 100_000;
    let ds: Vec<f64> = (0..n)
        .map(|i| {
            estimate_marginal(&target, &subspace, &[0.0], InactiveProposal::StandardGaussian, 1, root.child(i), false)
                .log_d
                .exp()
        })
        .collect();
    let mean = ds.iter().sum::<f64>() / n as f64;
    let var = ds.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let truth = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    outcome(
        (mean - truth).abs() <= 3.0 * se,
        format!("mean of d {mean:.5} vs {truth:.5}, |diff| {:.2e} ≤ 3·{se:.2e}", (mean - truth).abs()),
    )
}

fn random_symmetric(n: usize, rng: &mut impl Rng) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = rng.random_range(-1.0..1.0);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

fn linear_algebra() -> Outcome {
    let mut rng = StreamKey::root(6).rng();
    let mut worst_reconstruction = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=40);
        let a = random_symmetric(n, &mut rng);
        let eig = symmetric_eigendecompose(&a).unwrap();
        let r = eig.reconstruct();
        let err = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (r[(i, j)] - a[(i, j)]).abs())
            .fold(0.0, f64::max);
        worst_reconstruction = worst_reconstruction.max(err);
    }

    let sub = gradient_covariance_from_points(|_: &[f64]| Some(vec![3.0, 4.0]), &vec![vec![0.0, 0.0]; 10], ActiveDim::Detect)
        .unwrap();
    let v = sub.active_basis().column(0);
    let sign = v[0].signum();
    let direction_err = (sign * v[0] - 0.6).abs().max((sign * v[1] - 0.8).abs());

    let mut worst_gram = 0.0f64;
    for _ in 0..100 {
        let m = rng.random_range(2..=30);
        let k = rng.random_range(1..m);
        let seed = random_symmetric(m, &mut rng);
        let eig = symmetric_eigendecompose(&seed).unwrap();
        let partial = Matrix::from_columns(&(0..k).map(|c| eig.eigenvector(c)).collect::<Vec<_>>()).unwrap();
        let full = partial.hstack(&complete_orthonormal_basis(&partial).unwrap()).unwrap();
        worst_gram = worst_gram.max(full.gram().identity_deviation());
    }
    outcome(
        worst_reconstruction <= 1e-8 && direction_err <= 1e-6 && worst_gram <= 1e-10,
        format!(
            "reconstruction {worst_reconstruction:.1e} ≤ 1e-8, rank-1 direction {direction_err:.1e} ≤ 1e-6, Gram {worst_gram:.1e} ≤ 1e-10"
        ),
    )
}

fn final_state(params: &Lorenz96Params, x0: &[f64], t1: f64, step: f64) -> Vec<f64> {
    integrate(params, x0, 0.0, t1, step).unwrap().last().unwrap().to_vec()
}

fn ode_oracles() -> Outcome {
    let params = Lorenz96Params::single_scale(8, 8.0).unwrap();
    let fixed = vec![8.0; 8];
    let traj = integrate(&params, &fixed, 0.0, 10.0, 0.01).unwrap();
    let drift = traj
        .states
        .iter()
        .flat_map(|s| s.iter().map(|v| (v - 8.0).abs()))
        .fold(0.0, f64::max);

    let x0: Vec<f64> = (0..8).map(|k| 8.0 + 0.1 * (k as f64).sin()).collect();
    let coarse = final_state(&params, &x0, 1.0, 0.02);
    let medium = final_state(&params, &x0, 1.0, 0.01);
    let fine = final_state(&params, &x0, 1.0, 0.005);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    let ratio = dist(&coarse, &medium) / dist(&medium, &fine);
    outcome(
        drift <= f64::EPSILON * 8.0 && (12.0..=20.0).contains(&ratio),
        format!("fixed-point drift {drift:.1e}, step-halving ratio {ratio:.2} in [12, 20]"),
    )
}

fn lorenz_desk(dir: &Path) -> Outcome {
    let start = Instant::now();
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 0..SEEDS {
        let base = "experiment = \"lorenz96\"\nlorenz96.dim = 8\nlorenz96.t1 = 2.0\n";
        let v = run(&format!("{base}sampler.mode = \"vanilla\"\nseed = {seed}"), &dir.join(format!("lv{seed}")));
        let e = run(&format!("{base}sampler.mode = \"easmh\"\nseed = {seed}"), &dir.join(format!("le{seed}")));
        assert!(
            v.total_evaluations().abs_diff(e.total_evaluations()) <= 10,
            "budgets differ: {} vs {}",
            v.total_evaluations(),
            e.total_evaluations()
        );
        if e.max_autocorrelation <= v.max_autocorrelation {
            wins += 1;
        }
        lines.push(format!("{:.3}/{:.3}", e.max_autocorrelation, v.max_autocorrelation));
    }
    let elapsed = start.elapsed().as_secs_f64();

    let full = run("experiment = \"lorenz96\"\nsampler.mode = \"easmh\"\nseed = 0", &dir.join("full"));
    let gap = full.subspace.as_ref().and_then(ActiveSubspace::spectral_gap);
    let gap = gap.map_or("none".to_string(), |g| format!("cut {} ratio {:.3e}", g.cut_index, g.gap_ratio));
    outcome(
        wins >= 14 && elapsed < 120.0,
        format!(
            "easmh ≤ vanilla lag 1..10 autocorrelation in {wins}/{SEEDS} seeds (need 14) in {elapsed:.1}s; \
             full scale (report only): active dim {}, gap {gap}, acceptance {:.3}",
            full.subspace.as_ref().map_or(0, ActiveSubspace::active_dim),
            full.chain.acceptance_rate()
        ),
    )
}

fn diagnostics_oracles() -> Outcome {
    let mut rng = StreamKey::root(9).rng();
    let normal = rand_normal(&mut rng, 200_000);
    let mut ar = Vec::with_capacity(normal.len());
    let mut prev = 0.0;
    for e in &normal {
        prev = 0.5 * prev + e;
        ar.push(vec![prev]);
    }
    let curve = autocorrelation(&ar, 10).unwrap();
    let ar_err = (1..=10)
        .map(|k| (curve.values[k] - 0.5f64.powi(k as i32)).abs())
        .fold(0.0, f64::max);

    let iid: Vec<Vec<f64>> = rand_normal(&mut rng, 10_000).into_iter().map(|v| vec![v]).collect();
    let ess = effective_sample_size(&iid).unwrap()[0];
    let ess_err = (ess / iid.len() as f64 - 1.0).abs();

    let points: Vec<Vec<f64>> = rand_normal(&mut rng, 2000).chunks(2).map(|c| c.to_vec()).collect();
    let weights = vec![1.0; points.len()];
    let axis = Axis::new(-8.0, 8.0, 161).unwrap();
    let grid = gaussian_kde(&points, &weights, &[axis.clone(), axis], &Bandwidth::Scott).unwrap();
    let mass_err = (grid.mass() - 1.0).abs();
    outcome(
        ar_err <= 0.02 && ess_err <= 0.15 && mass_err <= 0.01,
        format!("AR(1) max error {ar_err:.4} ≤ 0.02, iid ESS off by {:.1}% ≤ 15%, KDE mass error {mass_err:.1e} ≤ 0.01", ess_err * 100.0),
    )
}

fn rand_normal(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn same_bytes(a: &Path, b: &Path, files: &[&str]) -> bool {
    files.iter().all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap())
}

fn determinism(dir: &Path) -> Outcome {
    let configs = [
        ("mixture2d-easmh", "experiment = \"mixture2d\"\nsampler.mode = \"easmh\"\nseed = 11"),
        ("mixture2d-vanilla", "experiment = \"mixture2d\"\nsampler.mode = \"vanilla\"\nseed = 11"),
        ("mixture10d-original", "experiment = \"mixture10d\"\nsampler.mode = \"asmh_original\"\nseed = 11"),
        (
            "lorenz96-easmh",
            "experiment = \"lorenz96\"\nlorenz96.dim = 8\nlorenz96.t1 = 2.0\nsampler.mode = \"easmh\"\nseed = 11",
        ),
    ];
    let mut failures = Vec::new();
    for (name, text) in configs {
        let mut dirs = Vec::new();
        for threads in [1, 4, 4] {
            let out = dir.join(format!("{name}-{threads}-{}", dirs.len()));
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run(text, &out));
            dirs.push(out);
        }
        let files: &[&str] = if text.contains("vanilla") {
            &["y_samples.csv"]
        } else {
            &["y_samples.csv", "x_samples.csv", "subspace.txt"]
        };
        if !dirs[1..].iter().all(|d| same_bytes(&dirs[0], d, files)) {
            failures.push(name);
        }
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "sample CSVs byte-identical across reruns and 1 vs 4 threads for 4 configs".to_string()
        } else {
            format!("differences in {failures:?}")
        },
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mixture = mixture_runs(dir.path());
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("mixture2d acceptance rates", Box::new(|| acceptance_rates(&mixture))),
        ("mixture2d bimodality", Box::new(|| bimodality(&mixture))),
        ("GIMH exactness", Box::new(gimh_exactness)),
        ("MCwM bias", Box::new(mcwm_bias)),
        ("marginal estimator unbiasedness", Box::new(estimator_unbiasedness)),
        ("linear algebra oracles", Box::new(linear_algebra)),
        ("ODE oracles", Box::new(ode_oracles)),
        ("lorenz96 desk-scale pipeline", Box::new(|| lorenz_desk(dir.path()))),
        ("diagnostics oracles", Box::new(diagnostics_oracles)),
        ("determinism", Box::new(|| determinism(dir.path()))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({:.1}s) {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
