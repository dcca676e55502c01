//! End-to-end runs: target and data, subspace construction, sampling,
//! diagnostics and artifacts.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use easmh::diagnostics::{self, Axis, Bandwidth, DiagnosticsError};
use easmh::ode::{self, ObservationRecord};
use easmh::rng::{stage, StreamKey};
use easmh::samplers::{self, AsmhOptions, AsmhVariant, ChainOutput, WeightedSample};
use easmh::subspace::{self, ActiveDim, ActiveSubspace, SubspaceMethod};
use easmh::targets::{
    make_lorenz96_posterior, make_mixture_experiment_target, Counted, DensityModel, Gaussian, GaussianMixture,
    GaussianRatioLikelihood, Lorenz96Posterior, MixtureVariant, Posterior,
};
use serde_json::{json, Value};

use crate::config::{Experiment, Mode, RunConfig};
use crate::{CliError, Result};

pub const SUBSPACE_FILE: &str = "subspace.txt";
pub const DATA_FILE: &str = "data.csv";
pub const Y_SAMPLES_FILE: &str = "y_samples.csv";
pub const X_SAMPLES_FILE: &str = "x_samples.csv";
pub const AUTOCORRELATION_FILE: &str = "autocorrelation.csv";
pub const KDE_FILE: &str = "kde.csv";
pub const OCCUPANCY_FILE: &str = "occupancy.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FAILED_FILE: &str = "FAILED";

/// Saved artifacts to use instead of recomputing a stage.
#[derive(Debug, Clone, Default)]
pub struct Reuse {
    pub subspace: Option<PathBuf>,
    pub data: Option<PathBuf>,
}

/// What a run produced, as also written to `summary.json`.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub chain: ChainOutput,
    pub subspace: Option<ActiveSubspace>,
    pub construction_evaluations: u64,
    pub max_autocorrelation: f64,
    pub stuck: bool,
    pub occupancy: Option<Vec<f64>>,
    pub summary: Value,
}

impl RunReport {
    pub fn total_evaluations(&self) -> u64 {
        self.construction_evaluations + self.chain.evaluation_count
    }
}

/// Target, construction sampler and experiment extras.
pub struct Problem {
    pub target: Arc<dyn DensityModel>,
    /// Draws construction points; its density weights posterior-covariance fits.
    pub construction_sampler: Gaussian,
    pub mode_centers: Option<Vec<Vec<f64>>>,
    pub lorenz: Option<Arc<Lorenz96Posterior>>,
    pub truth: Option<Vec<f64>>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.target.dim()
    }
}

fn mixture(variant: MixtureVariant) -> (GaussianMixture, Vec<Vec<f64>>) {
    let t = make_mixture_experiment_target(variant);
    let centers = t.means();
    (t, centers)
}

/// Lorenz-96 ground truth: an initial state from the prior and the configured forcing.
pub fn lorenz_truth(cfg: &RunConfig) -> Result<Vec<f64>> {
    let params = cfg.lorenz96.truth_params()?;
    let prior = Gaussian::isotropic(vec![0.0; params.state_dim()], cfg.lorenz96.prior_variance)?;
    let mut rng = StreamKey::root(cfg.seed).child(stage::TRUTH).rng();
    Ok(prior.draw(&mut rng))
}

/// Synthetic observations from the ground truth.
pub fn generate_data(cfg: &RunConfig, truth_state: &[f64]) -> Result<ObservationRecord> {
    let l = &cfg.lorenz96;
    let params = l.truth_params()?;
    Ok(ode::generate_lorenz96_data(
        &params,
        truth_state,
        l.t0,
        l.t1,
        l.step,
        l.noise_variance,
        StreamKey::root(cfg.seed).child(stage::DATA),
    )?)
}

pub fn read_data(path: &Path) -> Result<ObservationRecord> {
    let f = File::open(path).map_err(CliError::io(path))?;
    Ok(ObservationRecord::read_csv(f)?)
}

pub fn build_problem(cfg: &RunConfig, data: Option<ObservationRecord>) -> Result<Problem> {
    let isotropic = |m: usize| Gaussian::isotropic(vec![0.0; m], cfg.subspace.prior_variance);
    Ok(match cfg.experiment {
        Experiment::Mixture2d | Experiment::Mixture10d => {
            let variant = if cfg.experiment == Experiment::Mixture2d {
                MixtureVariant::TwoD
            } else {
                MixtureVariant::TenD
            };
            let (target, centers) = mixture(variant);
            let m = target.dim();
            Problem {
                target: Arc::new(target),
                construction_sampler: isotropic(m)?,
                mode_centers: Some(centers),
                lorenz: None,
                truth: None,
            }
        }
        Experiment::Custom => {
            let c = cfg.custom.as_ref().ok_or_else(|| CliError::Usage("custom target missing".into()))?;
            let goal = Gaussian::diagonal(c.mean.clone(), c.variances.clone())?;
            let prior = isotropic(c.mean.len())?;
            let likelihood = GaussianRatioLikelihood::new(goal, prior.clone())?;
            Problem {
                target: Arc::new(Posterior::new(prior.clone(), likelihood)?),
                construction_sampler: prior,
                mode_centers: None,
                lorenz: None,
                truth: None,
            }
        }
        Experiment::Lorenz96 => {
            let state = lorenz_truth(cfg)?;
            let data = match data {
                Some(d) => d,
                None => generate_data(cfg, &state)?,
            };
            let post = Arc::new(make_lorenz96_posterior(cfg.lorenz96.clone(), data)?);
            let mut truth = state;
            truth.push(cfg.lorenz96.forcing);
            Problem {
                target: post.clone(),
                construction_sampler: post.prior().clone(),
                mode_centers: None,
                lorenz: Some(post),
                truth: Some(truth),
            }
        }
    })
}

/// Builds the configured subspace; returns it with the number of target
/// evaluations spent and, for posterior covariance, the importance ESS.
pub fn construct_subspace(cfg: &RunConfig, problem: &Problem) -> Result<(ActiveSubspace, u64, Option<f64>)> {
    let stream = StreamKey::root(cfg.seed).child(stage::CONSTRUCTION);
    let counted = Counted::new(problem.target.clone());
    let n = cfg.subspace.construction_points;
    let dim = ActiveDim::from(cfg.subspace.active_dim);
    let (s, ess) = match cfg.subspace.method {
        SubspaceMethod::Manual => (
            ActiveSubspace::coordinate(problem.dim(), cfg.subspace.active_dim.unwrap_or(1))?,
            None,
        ),
        SubspaceMethod::LinearRegression => (
            subspace::construct_linear_regression(&counted, &problem.construction_sampler, n, stream)?,
            None,
        ),
        SubspaceMethod::PosteriorCovariance => {
            let fit =
                subspace::construct_posterior_covariance(&counted, &problem.construction_sampler, n, dim, stream)?;
            (fit.subspace, Some(fit.effective_sample_size))
        }
        SubspaceMethod::GradientCovariance => (
            subspace::construct_gradient_covariance(&counted, &problem.construction_sampler, n, dim, stream)?,
            None,
        ),
    };
    Ok((s, counted.count(), ess))
}

pub fn read_subspace(path: &Path) -> Result<ActiveSubspace> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    Ok(ActiveSubspace::parse(&text)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(CliError::io(path))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

/// Runs the configured experiment and writes every artifact into
/// `cfg.output_dir`. On failure a `FAILED` marker holding the error is left
/// next to any partial artifacts.
pub fn run_experiment(cfg: &RunConfig, reuse: &Reuse) -> Result<RunReport> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let marker = dir.join(FAILED_FILE);
    if marker.exists() {
        fs::remove_file(&marker).map_err(CliError::io(&marker))?;
    }
    let result = run_inner(cfg, reuse, dir);
    if let Err(e) = &result {
        let _ = fs::write(&marker, format!("{e}\n"));
    }
    result
}

fn run_inner(cfg: &RunConfig, reuse: &Reuse, dir: &Path) -> Result<RunReport> {
    let started = Instant::now();
    let data = reuse.data.as_deref().map(read_data).transpose()?;
    if data.is_some() && cfg.experiment != Experiment::Lorenz96 {
        return Err(CliError::Usage("--data only applies to experiment lorenz96".into()));
    }
    let problem = build_problem(cfg, data)?;
    if let Some(post) = &problem.lorenz {
        post.likelihood().data().write_csv(create(&dir.join(DATA_FILE))?)?;
    }
    let m = problem.dim();

    let needs_subspace = cfg.sampler.mode.uses_subspace() || cfg.experiment == Experiment::Lorenz96;
    let (subspace, construction_evaluations, construction_ess) = match (&reuse.subspace, needs_subspace) {
        (Some(path), _) => (Some(read_subspace(path)?), 0, None),
        (None, true) => {
            let (s, evals, ess) = construct_subspace(cfg, &problem)?;
            (Some(s), evals, ess)
        }
        (None, false) => (None, 0, None),
    };
    if let Some(s) = &subspace {
        if s.ambient_dim() != m {
            return Err(CliError::Usage(format!(
                "subspace lives in R^{} but the target has dimension {m}",
                s.ambient_dim()
            )));
        }
        write_text(&dir.join(SUBSPACE_FILE), &s.to_artifact())?;
    }

    let x0 = subspace
        .as_ref()
        .and_then(|s| s.center())
        .filter(|_| cfg.experiment == Experiment::Lorenz96)
        .map_or_else(|| vec![0.0; m], <[f64]>::to_vec);

    let sc = &cfg.sampler;
    let chain = match sc.mode {
        Mode::Vanilla => {
            samplers::run_vanilla_mh(problem.target.as_ref(), &sc.proposal, &x0, sc.iterations, sc.burn_in, cfg.seed)?
        }
        Mode::Easmh | Mode::AsmhOriginal => {
            let s = subspace.as_ref().expect("subspace modes construct a subspace");
            let options = AsmhOptions {
                iterations: sc.iterations,
                nested_samples: sc.nested_samples,
                variant: if sc.mode == Mode::Easmh {
                    AsmhVariant::Gimh
                } else {
                    AsmhVariant::Mcwm
                },
                burn_in: sc.burn_in,
                inactive_proposal: sc.inactive_proposal,
                parallel: true,
            };
            samplers::run_asmh(problem.target.as_ref(), s, &sc.proposal, &x0, &options, cfg.seed)?
        }
    };

    chain.write_y_csv(create(&dir.join(Y_SAMPLES_FILE))?)?;
    let chain_subspace = if sc.mode.uses_subspace() { subspace.as_ref() } else { None };
    let xs = chain.x_samples(chain_subspace, sc.pseudo_weights);
    samplers::write_x_csv(&xs, create(&dir.join(X_SAMPLES_FILE))?)?;

    let thinned: Vec<Vec<f64>> = xs.iter().step_by(cfg.diagnostics.thin).map(|w| w.x.clone()).collect();
    let (curve, stuck) = autocorrelation_or_stuck(&thinned, cfg.diagnostics.max_lag)?;
    curve.write_csv(create(&dir.join(AUTOCORRELATION_FILE))?)?;
    let max_autocorrelation = curve.max_over(1, 10);

    let kde = weighted_kde(cfg, &xs)?;
    kde.write_csv(create(&dir.join(KDE_FILE))?)?;

    let occupancy = match &problem.mode_centers {
        Some(centers) => {
            let pts: Vec<Vec<f64>> = xs.iter().map(|w| w.x.clone()).collect();
            let weights: Vec<f64> = xs.iter().map(|w| w.weight).collect();
            let occ = diagnostics::mode_occupancy(&pts, &weights, centers)?;
            diagnostics::write_occupancy_csv(&occ, create(&dir.join(OCCUPANCY_FILE))?)?;
            Some(occ)
        }
        None => None,
    };

    let ess = diagnostics::effective_sample_size(&chain.samples).unwrap_or_else(|_| vec![0.0; chain.dim()]);
    let subspace_json = subspace.as_ref().map(|s| {
        json!({
            "method": s.method().as_str(),
            "ambient_dim": s.ambient_dim(),
            "active_dim": s.active_dim(),
            "eigenvalues": s.eigenvalues(),
            "gap_cut": s.spectral_gap().map(|g| g.cut_index),
            "gap_ratio": s.spectral_gap().map(|g| g.gap_ratio),
            "construction_ess": construction_ess,
            "loaded_from": reuse.subspace.as_ref().map(|p| p.display().to_string()),
        })
    });
    let lorenz_json = problem.lorenz.as_ref().map(|p| {
        json!({
            "truth": problem.truth,
            "divergences": p.likelihood().divergence_count(),
            "observations": p.likelihood().data().n_observations(),
        })
    });
    let summary = json!({
        "experiment": cfg.experiment.as_str(),
        "mode": cfg.sampler.mode.as_str(),
        "seed": cfg.seed,
        "ambient_dim": m,
        "samples": chain.len(),
        "acceptance_rate": chain.acceptance_rate(),
        "evaluation_count": construction_evaluations + chain.evaluation_count,
        "evaluation_counts": {
            "construction": construction_evaluations,
            "sampler": chain.evaluation_count,
        },
        "ess": ess,
        "max_autocorrelation_lag_1_10": max_autocorrelation,
        "stuck": stuck,
        "occupancy": occupancy,
        "subspace": subspace_json,
        "lorenz96": lorenz_json,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "config": cfg.to_toml(),
    });
    let text = serde_json::to_string_pretty(&summary).expect("JSON values serialize");
    write_text(&dir.join(SUMMARY_FILE), &(text + "\n"))?;

    Ok(RunReport {
        chain,
        subspace,
        construction_evaluations,
        max_autocorrelation,
        stuck,
        occupancy,
        summary,
    })
}

/// Autocorrelation of the thinned samples. A chain that never moved has no
/// defined autocorrelation; it is reported as 1 at every lag and flagged.
pub fn autocorrelation_or_stuck(
    samples: &[Vec<f64>],
    max_lag: usize,
) -> Result<(diagnostics::AutocorrelationCurve, bool)> {
    if samples.len() < 2 {
        return Err(CliError::Runtime("too few samples for autocorrelation".into()));
    }
    let lag = max_lag.min(samples.len() - 1);
    if lag < max_lag {
        log::warn!("max lag {max_lag} reduced to {lag} for a chain of {} samples", samples.len());
    }
    match diagnostics::autocorrelation(samples, lag) {
        Ok(c) => Ok((c, false)),
        Err(DiagnosticsError::ConstantChain) => {
            log::warn!("chain never moved; autocorrelation reported as 1");
            Ok((diagnostics::AutocorrelationCurve { values: vec![1.0; lag + 1] }, true))
        }
        Err(e) => Err(e.into()),
    }
}

fn weighted_kde(cfg: &RunConfig, xs: &[WeightedSample]) -> Result<diagnostics::KdeGrid> {
    let d = xs[0].x.len().min(2);
    let pts: Vec<Vec<f64>> = xs.iter().map(|w| w.x[..d].to_vec()).collect();
    let weights: Vec<f64> = xs.iter().map(|w| w.weight).collect();
    let total: f64 = weights.iter().sum();
    let count = cfg.diagnostics.kde_points;
    let axes = (0..d)
        .map(|k| {
            if cfg.experiment == Experiment::Mixture2d {
                return Axis::new(-6.0, 6.0, count);
            }
            let mean = pts.iter().zip(&weights).map(|(p, w)| w * p[k]).sum::<f64>() / total;
            let var = pts.iter().zip(&weights).map(|(p, w)| w * (p[k] - mean).powi(2)).sum::<f64>() / total;
            let half = 4.0 * var.sqrt().max(0.25);
            Axis::new(mean - half, mean + half, count)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let bandwidth = match &cfg.diagnostics.kde_bandwidth {
        Bandwidth::PerDimension(h) => Bandwidth::PerDimension(vec![h[0]; d]),
        Bandwidth::Scott => Bandwidth::Scott,
    };
    match diagnostics::gaussian_kde(&pts, &weights, &axes, &bandwidth) {
        Err(DiagnosticsError::InvalidBandwidth(_)) => {
            log::warn!("no spread for an automatic KDE bandwidth; using the grid spacing");
            let h = axes.iter().map(|a| a.spacing()).collect();
            Ok(diagnostics::gaussian_kde(&pts, &weights, &axes, &Bandwidth::PerDimension(h))?)
        }
        other => Ok(other?),
    }
}

/// Writes ground truth and observations for a lorenz96 config.
pub fn generate_data_files(cfg: &RunConfig) -> Result<ObservationRecord> {
    if cfg.experiment != Experiment::Lorenz96 {
        return Err(CliError::Usage("gen-data only applies to experiment lorenz96".into()));
    }
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let state = lorenz_truth(cfg)?;
    let data = generate_data(cfg, &state)?;
    data.write_csv(create(&dir.join(DATA_FILE))?)?;
    let mut truth = state;
    truth.push(cfg.lorenz96.forcing);
    let text = serde_json::to_string_pretty(&json!({ "truth": truth })).expect("JSON values serialize");
    write_text(&dir.join("truth.json"), &(text + "\n"))?;
    Ok(data)
}

/// Runs only the construction stage and writes `subspace.txt`.
pub fn build_subspace_file(cfg: &RunConfig, data: Option<&Path>) -> Result<ActiveSubspace> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let data = data.map(read_data).transpose()?;
    let problem = build_problem(cfg, data)?;
    let (s, evals, _) = construct_subspace(cfg, &problem)?;
    log::info!("constructed {} subspace with {evals} target evaluations", s.method());
    write_text(&dir.join(SUBSPACE_FILE), &s.to_artifact())?;
    Ok(s)
}
