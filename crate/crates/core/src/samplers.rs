//! Random-walk Metropolis–Hastings and active-subspace pseudo-marginal chains.
//!
//! The active-subspace chain moves `y` with a Gaussian random walk and replaces
//! the marginal density `ρ(y) = ∫ ρ(B_a y + B_i z) dz` by the importance-sampling
//! estimate `d = (1/M) Σ ρ(B_a y + B_i z_j) / q_z(z_j)` with `z_j ~ q_z`.
//!
//! With [`AsmhVariant::Gimh`] the estimate attached to the current state is
//! kept until the next acceptance, which makes `ρ(y)` the exact stationary
//! marginal. [`AsmhVariant::Mcwm`] re-estimates the current state every
//! iteration and is biased.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{role, stage, StreamKey};
use crate::subspace::ActiveSubspace;
use crate::targets::{log_sum_exp, DensityModel};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("NaN in acceptance ratio ({0})")]
    NotANumber(&'static str),
    #[error("target density is zero at the starting point")]
    BadStart,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SamplerError>;

/// Gaussian random-walk proposal with a scalar or per-dimension standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub enum ProposalSpec {
    Isotropic(f64),
    PerDimension(Vec<f64>),
}

impl ProposalSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Self::Isotropic(s) if !(*s > 0.0 && s.is_finite()) => {
                Err(SamplerError::InvalidConfig(format!("proposal scale must be positive, got {s}")))
            }
            Self::PerDimension(v) if v.len() != dim => Err(SamplerError::DimensionMismatch(format!(
                "{} proposal scales for dimension {dim}",
                v.len()
            ))),
            Self::PerDimension(v) if v.iter().any(|s| !(*s > 0.0 && s.is_finite())) => Err(
                SamplerError::InvalidConfig("proposal scales must be positive".into()),
            ),
            _ => Ok(()),
        }
    }

    fn scale(&self, i: usize) -> f64 {
        match self {
            Self::Isotropic(s) => *s,
            Self::PerDimension(v) => v[i],
        }
    }

    pub fn propose(&self, current: &[f64], rng: &mut dyn RngCore) -> Vec<f64> {
        current
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let e: f64 = rng.sample(StandardNormal);
                c + self.scale(i) * e
            })
            .collect()
    }

    /// `log q(to | from)`.
    pub fn log_density(&self, to: &[f64], from: &[f64]) -> f64 {
        to.iter()
            .zip(from)
            .enumerate()
            .map(|(i, (t, f))| {
                let s = self.scale(i);
                let u = (t - f) / s;
                -0.5 * (u * u + LN_2PI) - s.ln()
            })
            .sum()
    }
}

/// Importance distribution `q_z` on the inactive coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InactiveProposal {
    #[default]
    StandardGaussian,
    ScaledGaussian(f64),
}

impl InactiveProposal {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::ScaledGaussian(s) if !(*s > 0.0 && s.is_finite()) => Err(SamplerError::InvalidConfig(format!(
                "inactive proposal scale must be positive, got {s}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            Self::StandardGaussian => 1.0,
            Self::ScaledGaussian(s) => *s,
        }
    }

    pub fn draw(&self, dim: usize, rng: &mut dyn RngCore) -> Vec<f64> {
        let s = self.scale();
        (0..dim)
            .map(|_| {
                let e: f64 = rng.sample(StandardNormal);
                s * e
            })
            .collect()
    }

    pub fn log_density(&self, z: &[f64]) -> f64 {
        let s = self.scale();
        let ls = s.ln();
        z.iter()
            .map(|v| {
                let u = v / s;
                -0.5 * (u * u + LN_2PI) - ls
            })
            .sum()
    }
}

/// Importance-sampling estimate of the marginal density at one active point.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalEstimate {
    /// `log((1/M) Σ w_j)`.
    pub log_d: f64,
    pub z_draws: Vec<Vec<f64>>,
    /// `log w_j = log ρ(B_a y + B_i z_j) - log q_z(z_j)`.
    pub log_weights: Vec<f64>,
}

impl MarginalEstimate {
    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    /// `w_j / Σ w`, or uniform weights when every `w_j` is zero.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total = log_sum_exp(&self.log_weights);
        if total == f64::NEG_INFINITY {
            return vec![1.0 / self.len() as f64; self.len()];
        }
        self.log_weights.iter().map(|l| (l - total).exp()).collect()
    }
}

/// Estimates the marginal at `y` from `count` draws of `q_z`. Draw `j` uses the
/// substream `stream.child(j)`, so the result does not depend on `parallel`.
pub fn estimate_marginal(
    target: &dyn DensityModel,
    subspace: &ActiveSubspace,
    y: &[f64],
    qz: InactiveProposal,
    count: usize,
    stream: StreamKey,
    parallel: bool,
) -> MarginalEstimate {
    assert!(count >= 1, "at least one nested sample is required");
    let one = |j: usize| {
        let mut rng = stream.child(j as u64).rng();
        let z = qz.draw(subspace.inactive_dim(), &mut rng);
        let x = subspace.reconstruct(y, &z);
        let lw = target.log_density(&x) - qz.log_density(&z);
        (z, if lw.is_nan() { f64::NEG_INFINITY } else { lw })
    };
    let pairs: Vec<(Vec<f64>, f64)> = if parallel && count > 1 {
        (0..count).into_par_iter().map(one).collect()
    } else {
        (0..count).map(one).collect()
    };
    let (z_draws, log_weights): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let log_d = log_sum_exp(&log_weights) - (count as f64).ln();
    MarginalEstimate {
        log_d,
        z_draws,
        log_weights,
    }
}

/// Metropolis–Hastings decision for `min(1, num q_backward / (den q_forward))`.
///
/// Always consumes exactly one uniform. A zero current density accepts any
/// proposal with positive density; both zero rejects.
pub fn mh_accept(
    log_num: f64,
    log_den: f64,
    log_q_forward: f64,
    log_q_backward: f64,
    rng: &mut dyn RngCore,
) -> Result<bool> {
    if log_num.is_nan() || log_den.is_nan() || log_q_forward.is_nan() || log_q_backward.is_nan() {
        return Err(SamplerError::NotANumber("input"));
    }
    let u: f64 = rng.random();
    if log_den == f64::NEG_INFINITY {
        return Ok(log_num > f64::NEG_INFINITY);
    }
    let log_alpha = log_num + log_q_backward - log_den - log_q_forward;
    if log_alpha.is_nan() {
        return Err(SamplerError::NotANumber("ratio"));
    }
    Ok(log_alpha >= 0.0 || u.ln() < log_alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AsmhVariant {
    /// Recycle the current estimate (exact).
    Gimh,
    /// Re-estimate the current state each iteration (biased).
    Mcwm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsmhOptions {
    pub iterations: usize,
    pub nested_samples: usize,
    pub variant: AsmhVariant,
    pub burn_in: usize,
    pub inactive_proposal: InactiveProposal,
    /// Evaluate nested samples on the rayon pool.
    pub parallel: bool,
}

impl Default for AsmhOptions {
    fn default() -> Self {
        Self {
            iterations: 500,
            nested_samples: 10,
            variant: AsmhVariant::Gimh,
            burn_in: 0,
            inactive_proposal: InactiveProposal::StandardGaussian,
            parallel: true,
        }
    }
}

/// How reconstructed full-space pseudo-samples are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PseudoWeighting {
    /// `w_{i,j} / Σ_j w_{i,j}`.
    #[default]
    SelfNormalized,
    /// `1 / M` for every draw.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub iter: usize,
    pub j: usize,
    pub weight: f64,
    pub x: Vec<f64>,
}

/// Retained chain rows after burn-in.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    /// Active coordinates, or full states for plain MH.
    pub samples: Vec<Vec<f64>>,
    pub accepted: Vec<bool>,
    /// Log density, or log estimate, attached to each stored state.
    pub log_d: Vec<f64>,
    /// Stored estimate of each row; empty for plain MH.
    pub estimates: Vec<Arc<MarginalEstimate>>,
    /// Iteration index of the first retained row.
    pub first_iter: usize,
    pub evaluation_count: u64,
    pub seed: u64,
}

impl ChainOutput {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accepted.is_empty() {
            return 0.0;
        }
        self.accepted.iter().filter(|a| **a).count() as f64 / self.accepted.len() as f64
    }

    /// Full-space samples: pseudo-samples `B_a y_i + B_i z_{i,j}` for
    /// subspace chains, the states themselves with weight 1 for plain MH.
    pub fn x_samples(&self, subspace: Option<&ActiveSubspace>, weighting: PseudoWeighting) -> Vec<WeightedSample> {
        match subspace {
            Some(s) if !self.estimates.is_empty() => {
                reconstruct_x_samples(s, &self.samples, &self.estimates, weighting, self.first_iter)
            }
            _ => self
                .samples
                .iter()
                .enumerate()
                .map(|(i, x)| WeightedSample {
                    iter: self.first_iter + i,
                    j: 1,
                    weight: 1.0,
                    x: x.clone(),
                })
                .collect(),
        }
    }

    /// `iter,accepted,y1..yn,log_d`.
    pub fn write_y_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iter".to_string(), "accepted".to_string()];
        header.extend((1..=self.dim()).map(|k| format!("y{k}")));
        header.push("log_d".into());
        w.write_record(&header)?;
        for (i, ((y, a), ld)) in self.samples.iter().zip(&self.accepted).zip(&self.log_d).enumerate() {
            let mut rec = vec![(self.first_iter + i).to_string(), u8::from(*a).to_string()];
            rec.extend(y.iter().map(|v| v.to_string()));
            rec.push(ld.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// `iter,j,weight,x1..xm`.
pub fn write_x_csv<W: Write>(samples: &[WeightedSample], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dim = samples.first().map_or(0, |s| s.x.len());
    let mut header = vec!["iter".to_string(), "j".to_string(), "weight".to_string()];
    header.extend((1..=dim).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    for s in samples {
        let mut rec = vec![s.iter.to_string(), s.j.to_string(), s.weight.to_string()];
        rec.extend(s.x.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `x_{i,j} = B_a y_i + B_i z_{i,j}` with per-row weights summing to 1.
pub fn reconstruct_x_samples(
    subspace: &ActiveSubspace,
    y_samples: &[Vec<f64>],
    estimates: &[Arc<MarginalEstimate>],
    weighting: PseudoWeighting,
    first_iter: usize,
) -> Vec<WeightedSample> {
    let mut out = Vec::new();
    for (i, (y, est)) in y_samples.iter().zip(estimates).enumerate() {
        let weights = match weighting {
            PseudoWeighting::SelfNormalized => est.normalized_weights(),
            PseudoWeighting::Uniform => vec![1.0 / est.len() as f64; est.len()],
        };
        for (j, (z, w)) in est.z_draws.iter().zip(weights).enumerate() {
            out.push(WeightedSample {
                iter: first_iter + i,
                j: j + 1,
                weight: w,
                x: subspace.reconstruct(y, z),
            });
        }
    }
    out
}

/// Plain random-walk MH on the full space.
///
/// The chain has `iterations` rows including the start, which is row 0 with an
/// accept flag of `false`; exactly `iterations` target evaluations are made.
pub fn run_vanilla_mh(
    target: &dyn DensityModel,
    proposal: &ProposalSpec,
    x0: &[f64],
    iterations: usize,
    burn_in: usize,
    seed: u64,
) -> Result<ChainOutput> {
    let m = target.dim();
    if x0.len() != m {
        return Err(SamplerError::DimensionMismatch(format!("start has {} entries, target dimension {m}", x0.len())));
    }
    proposal.validate(m)?;
    if iterations <= burn_in {
        return Err(SamplerError::InvalidConfig(format!(
            "iterations ({iterations}) must exceed burn-in ({burn_in})"
        )));
    }
    let chain = StreamKey::root(seed).child(stage::CHAIN);
    let mut x = x0.to_vec();
    let mut lp = target.log_density(&x);
    let mut evaluations = 1u64;
    if lp == f64::NEG_INFINITY || lp.is_nan() {
        return Err(SamplerError::BadStart);
    }
    let keep = iterations - burn_in;
    let mut samples = Vec::with_capacity(keep);
    let mut accepted = Vec::with_capacity(keep);
    let mut log_d = Vec::with_capacity(keep);
    if burn_in == 0 {
        samples.push(x.clone());
        accepted.push(false);
        log_d.push(lp);
    }
    for i in 1..iterations {
        let mut rng = chain.child(i as u64).rng();
        let candidate = proposal.propose(&x, &mut rng);
        let lc = target.log_density(&candidate);
        evaluations += 1;
        let fwd = proposal.log_density(&candidate, &x);
        let bwd = proposal.log_density(&x, &candidate);
        let acc = mh_accept(lc, lp, fwd, bwd, &mut rng)?;
        if acc {
            x = candidate;
            lp = lc;
        }
        if i >= burn_in {
            samples.push(x.clone());
            accepted.push(acc);
            log_d.push(lp);
        }
    }
    Ok(ChainOutput {
        samples,
        accepted,
        log_d,
        estimates: Vec::new(),
        first_iter: burn_in,
        evaluation_count: evaluations,
        seed,
    })
}

/// Active-subspace pseudo-marginal MH.
///
/// Produces `iterations` rows (iterations `1..=iterations`) after an initial
/// estimate at `y_0 = B_aᵀ x_0`. Target evaluations: `M (N + 1)` for GIMH and
/// `2 M N + M` for MCwM.
pub fn run_asmh(
    target: &dyn DensityModel,
    subspace: &ActiveSubspace,
    proposal: &ProposalSpec,
    x0: &[f64],
    options: &AsmhOptions,
    seed: u64,
) -> Result<ChainOutput> {
    let m = target.dim();
    if subspace.ambient_dim() != m {
        return Err(SamplerError::DimensionMismatch(format!(
            "subspace lives in R^{}, target in R^{m}",
            subspace.ambient_dim()
        )));
    }
    if x0.len() != m {
        return Err(SamplerError::DimensionMismatch(format!("start has {} entries, target dimension {m}", x0.len())));
    }
    let n = subspace.active_dim();
    proposal.validate(n)?;
    options.inactive_proposal.validate()?;
    let big_m = options.nested_samples;
    if big_m == 0 {
        return Err(SamplerError::InvalidConfig("M must be ≥ 1".into()));
    }
    if options.iterations == 0 || options.burn_in >= options.iterations {
        return Err(SamplerError::InvalidConfig(format!(
            "iterations ({}) must be positive and exceed burn-in ({})",
            options.iterations, options.burn_in
        )));
    }
    let root = StreamKey::root(seed);
    let chain = root.child(stage::CHAIN);
    let nested = root.child(stage::NESTED);
    let qz = options.inactive_proposal;
    let estimate = |y: &[f64], iter: usize, who: u64| {
        estimate_marginal(target, subspace, y, qz, big_m, nested.child(iter as u64).child(who), options.parallel)
    };

    let mut y = subspace.to_active(x0);
    let mut current = Arc::new(estimate(&y, 0, role::INITIAL));
    let mut evaluations = big_m as u64;

    let keep = options.iterations - options.burn_in;
    let mut samples = Vec::with_capacity(keep);
    let mut accepted = Vec::with_capacity(keep);
    let mut log_d = Vec::with_capacity(keep);
    let mut estimates = Vec::with_capacity(keep);

    for i in 1..=options.iterations {
        let mut rng = chain.child(i as u64).rng();
        let candidate = proposal.propose(&y, &mut rng);
        let proposed = estimate(&candidate, i, role::PROPOSED);
        evaluations += big_m as u64;
        if options.variant == AsmhVariant::Mcwm {
            current = Arc::new(estimate(&y, i, role::CURRENT));
            evaluations += big_m as u64;
        }
        let fwd = proposal.log_density(&candidate, &y);
        let bwd = proposal.log_density(&y, &candidate);
        let acc = mh_accept(proposed.log_d, current.log_d, fwd, bwd, &mut rng)?;
        if acc {
            y = candidate;
            current = Arc::new(proposed);
        }
        if i > options.burn_in {
            samples.push(y.clone());
            accepted.push(acc);
            log_d.push(current.log_d);
            estimates.push(Arc::clone(&current));
        }
    }
    Ok(ChainOutput {
        samples,
        accepted,
        log_d,
        estimates,
        first_iter: options.burn_in + 1,
        evaluation_count: evaluations,
        seed,
    })
}
