//! Target densities: Gaussians and Gaussian mixtures, Gaussian-prior
//! posteriors, the two mixture experiment targets and the Lorenz-96 posterior.
//!
//! All densities are unnormalized and evaluated in log space. A model never
//! returns NaN; points outside the support map to `-inf`.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{Cholesky, LinalgError, Matrix};
use crate::ode::{self, Lorenz96Params, ObservationRecord, OdeError, TwoScale};

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("covariance is not symmetric positive definite: {0}")]
    NotPositiveDefinite(LinalgError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("a mixture needs at least one component")]
    EmptyMixture,
    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

pub type Result<T> = std::result::Result<T, TargetError>;

/// An unnormalized log-density on `R^m`, optionally split as prior × likelihood.
///
/// Implementations must be safe to evaluate from several threads at once.
pub trait DensityModel: Send + Sync {
    fn dim(&self) -> usize;

    /// `log ρ(x)`, or `-inf` outside the support. Never NaN.
    fn log_density(&self, x: &[f64]) -> f64;

    fn log_prior(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn log_likelihood(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// `∇ log ρ_l(x)` when available.
    fn loglik_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// An exact draw, for models that can be sampled directly.
    fn sample(&self, _rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        None
    }
}

impl<T: DensityModel + ?Sized> DensityModel for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
    fn log_prior(&self, x: &[f64]) -> Option<f64> {
        (**self).log_prior(x)
    }
    fn log_likelihood(&self, x: &[f64]) -> Option<f64> {
        (**self).log_likelihood(x)
    }
    fn loglik_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).loglik_gradient(x)
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        (**self).sample(rng)
    }
}

impl<T: DensityModel + ?Sized> DensityModel for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
    fn log_prior(&self, x: &[f64]) -> Option<f64> {
        (**self).log_prior(x)
    }
    fn log_likelihood(&self, x: &[f64]) -> Option<f64> {
        (**self).log_likelihood(x)
    }
    fn loglik_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).loglik_gradient(x)
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        (**self).sample(rng)
    }
}

impl<T: DensityModel + ?Sized> DensityModel for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        (**self).log_density(x)
    }
    fn log_prior(&self, x: &[f64]) -> Option<f64> {
        (**self).log_prior(x)
    }
    fn log_likelihood(&self, x: &[f64]) -> Option<f64> {
        (**self).log_likelihood(x)
    }
    fn loglik_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).loglik_gradient(x)
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        (**self).sample(rng)
    }
}

/// Replaces NaN by `-inf`.
fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// `log Σ exp(vᵢ)`, shifted by the maximum. Empty or all `-inf` input gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// A multivariate normal `N(mean, covariance)`.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: Vec<f64>,
    covariance: Matrix,
    chol: Cholesky,
    log_norm: f64,
    /// `Σ⁻¹`, cached for gradients.
    precision: Matrix,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        let m = mean.len();
        if covariance.rows() != m || covariance.cols() != m {
            return Err(TargetError::DimensionMismatch(format!(
                "mean has {m} entries, covariance is {}x{}",
                covariance.rows(),
                covariance.cols()
            )));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(TargetError::InvalidConfig("mean must be finite".into()));
        }
        let scale = covariance.max_abs();
        for i in 0..m {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > 1e-12 * scale {
                    return Err(TargetError::NotPositiveDefinite(LinalgError::NotSymmetric {
                        row: i,
                        col: j,
                        diff: (covariance[(i, j)] - covariance[(j, i)]).abs(),
                    }));
                }
            }
        }
        let chol = Cholesky::new(&covariance).map_err(TargetError::NotPositiveDefinite)?;
        let log_norm = -0.5 * (m as f64 * (2.0 * PI).ln() + chol.log_det());
        let mut precision = Matrix::zeros(m, m);
        for j in 0..m {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            for (i, v) in chol.solve(&e).into_iter().enumerate() {
                precision[(i, j)] = v;
            }
        }
        Ok(Self {
            mean,
            covariance,
            chol,
            log_norm,
            precision,
        })
    }

    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        let m = mean.len();
        Self::diagonal(mean, vec![variance; m])
    }

    pub fn diagonal(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if mean.len() != variances.len() {
            return Err(TargetError::DimensionMismatch(format!(
                "{} means, {} variances",
                mean.len(),
                variances.len()
            )));
        }
        Self::new(mean, Matrix::from_diagonal(&variances))
    }

    pub fn standard(m: usize) -> Self {
        Self::isotropic(vec![0.0; m], 1.0).expect("identity covariance is positive definite")
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    /// `(x - μ)ᵀ Σ⁻¹ (x - μ)`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let u = self.chol.solve_lower(&diff);
        u.iter().map(|v| v * v).sum()
    }

    /// Normalized `log N(x; μ, Σ)`.
    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.mean.len(), "Gaussian dimension mismatch");
        sanitize(self.log_norm - 0.5 * self.quadratic_form(x))
    }

    /// `-Σ⁻¹ (x - μ)`.
    pub fn grad_log_pdf(&self, x: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        self.precision.mul_vec(&diff).into_iter().map(|v| -v).collect()
    }

    pub fn draw(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let u: Vec<f64> = (0..self.mean.len()).map(|_| rng.sample(StandardNormal)).collect();
        self.chol
            .mul_lower(&u)
            .into_iter()
            .zip(&self.mean)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// `log N(x; gaussian)`; see [`Gaussian::log_pdf`].
pub fn gaussian_log_density(gaussian: &Gaussian, x: &[f64]) -> Result<f64> {
    if x.len() != gaussian.mean.len() {
        return Err(TargetError::DimensionMismatch(format!(
            "point has {} entries, Gaussian has dimension {}",
            x.len(),
            gaussian.mean.len()
        )));
    }
    Ok(gaussian.log_pdf(x))
}

impl DensityModel for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.log_pdf(x)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        Some(self.draw(rng))
    }
}

/// Finite mixture `Σ wᵢ N(μᵢ, Σᵢ)`.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    components: Vec<Gaussian>,
}

impl GaussianMixture {
    pub fn new(components: Vec<(f64, Gaussian)>) -> Result<Self> {
        let first = components.first().ok_or(TargetError::EmptyMixture)?;
        let dim = first.1.dim();
        if components.iter().any(|(_, g)| g.dim() != dim) {
            return Err(TargetError::DimensionMismatch("mixture components differ in dimension".into()));
        }
        if let Some((w, _)) = components.iter().find(|(w, _)| !(*w > 0.0) || !w.is_finite()) {
            return Err(TargetError::InvalidWeights(format!("weight {w} is not positive")));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(TargetError::InvalidWeights(format!("weights sum to {total}, not 1")));
        }
        let (weights, components): (Vec<f64>, Vec<Gaussian>) = components.into_iter().unzip();
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            weights,
            components,
        })
    }

    pub fn components(&self) -> impl Iterator<Item = (f64, &Gaussian)> {
        self.weights.iter().copied().zip(&self.components)
    }

    pub fn means(&self) -> Vec<Vec<f64>> {
        self.components.iter().map(|g| g.mean.clone()).collect()
    }

    /// `log Σ wᵢ N(x; μᵢ, Σᵢ)` via max-shifted exponentials.
    pub fn log_pdf(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_weights)
            .map(|(g, lw)| lw + g.log_pdf(x))
            .collect();
        sanitize(log_sum_exp(&terms))
    }
}

/// Free-function form of [`GaussianMixture::log_pdf`].
pub fn mixture_log_density(components: &[(f64, Gaussian)], x: &[f64]) -> Result<f64> {
    let mix = GaussianMixture::new(components.to_vec())?;
    if x.len() != mix.dim() {
        return Err(TargetError::DimensionMismatch(format!(
            "point has {} entries, mixture has dimension {}",
            x.len(),
            mix.dim()
        )));
    }
    Ok(mix.log_pdf(x))
}

impl DensityModel for GaussianMixture {
    fn dim(&self) -> usize {
        self.components[0].dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.log_pdf(x)
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = i;
                break;
            }
        }
        Some(self.components[chosen].draw(rng))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixtureVariant {
    TwoD,
    TenD,
}

/// The bimodal experiment targets.
///
/// `TwoD`: `0.5 N((2,2), Σ) + 0.5 N((-2,-2), Σ)` with `Σ = [[1, -0.9], [-0.9, 1]]`.
/// `TenD`: equal-weight components at `±2 e₁` in `R^10` with identity covariance.
pub fn make_mixture_experiment_target(variant: MixtureVariant) -> GaussianMixture {
    let comps = match variant {
        MixtureVariant::TwoD => {
            let cov = Matrix::from_rows(&[vec![1.0, -0.9], vec![-0.9, 1.0]]).expect("finite");
            vec![
                (0.5, Gaussian::new(vec![2.0, 2.0], cov.clone()).expect("PD")),
                (0.5, Gaussian::new(vec![-2.0, -2.0], cov).expect("PD")),
            ]
        }
        MixtureVariant::TenD => {
            let mut plus = vec![0.0; 10];
            plus[0] = 2.0;
            let minus: Vec<f64> = plus.iter().map(|v| -v).collect();
            vec![
                (0.5, Gaussian::isotropic(plus, 1.0).expect("PD")),
                (0.5, Gaussian::isotropic(minus, 1.0).expect("PD")),
            ]
        }
    };
    GaussianMixture::new(comps).expect("valid mixture")
}

/// A log-likelihood term for [`Posterior`].
pub trait LogLikelihood: Send + Sync {
    fn dim(&self) -> usize;
    fn log_likelihood(&self, x: &[f64]) -> f64;
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// `ρ(x) ∝ N(x; prior) · ρ_l(x)`.
#[derive(Debug, Clone)]
pub struct Posterior<L> {
    prior: Gaussian,
    likelihood: L,
}

impl<L: LogLikelihood> Posterior<L> {
    pub fn new(prior: Gaussian, likelihood: L) -> Result<Self> {
        if prior.dim() != likelihood.dim() {
            return Err(TargetError::DimensionMismatch(format!(
                "prior dimension {} vs likelihood dimension {}",
                prior.dim(),
                likelihood.dim()
            )));
        }
        Ok(Self { prior, likelihood })
    }

    pub fn prior(&self) -> &Gaussian {
        &self.prior
    }

    pub fn likelihood(&self) -> &L {
        &self.likelihood
    }
}

impl<L: LogLikelihood> DensityModel for Posterior<L> {
    fn dim(&self) -> usize {
        self.prior.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let lp = self.prior.log_pdf(x);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        sanitize(lp + self.likelihood.log_likelihood(x))
    }

    fn log_prior(&self, x: &[f64]) -> Option<f64> {
        Some(self.prior.log_pdf(x))
    }

    fn log_likelihood(&self, x: &[f64]) -> Option<f64> {
        Some(sanitize(self.likelihood.log_likelihood(x)))
    }

    fn loglik_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.likelihood.gradient(x)
    }

    /// Draws from the prior.
    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        Some(self.prior.draw(rng))
    }
}

/// Linear-Gaussian observation model `d = G x + ε`, `ε ~ N(0, σ² I)`.
#[derive(Debug, Clone)]
pub struct LinearGaussianLikelihood {
    operator: Matrix,
    data: Vec<f64>,
    noise_variance: f64,
}

impl LinearGaussianLikelihood {
    pub fn new(operator: Matrix, data: Vec<f64>, noise_variance: f64) -> Result<Self> {
        if operator.rows() != data.len() {
            return Err(TargetError::DimensionMismatch(format!(
                "operator has {} rows, data has {} entries",
                operator.rows(),
                data.len()
            )));
        }
        if !(noise_variance > 0.0) {
            return Err(TargetError::InvalidConfig("noise variance must be positive".into()));
        }
        Ok(Self {
            operator,
            data,
            noise_variance,
        })
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .iter()
            .zip(self.operator.mul_vec(x))
            .map(|(d, g)| d - g)
            .collect()
    }
}

impl LogLikelihood for LinearGaussianLikelihood {
    fn dim(&self) -> usize {
        self.operator.cols()
    }

    fn log_likelihood(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        let n = r.len() as f64;
        -0.5 * r.iter().map(|v| v * v).sum::<f64>() / self.noise_variance
            - 0.5 * n * (2.0 * PI * self.noise_variance).ln()
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let r = self.residual(x);
        Some(
            self.operator
                .transpose_mul_vec(&r)
                .into_iter()
                .map(|v| v / self.noise_variance)
                .collect(),
        )
    }
}

/// Likelihood `N(x; target) / N(x; prior)`, so that prior × likelihood is a
/// given Gaussian target.
#[derive(Debug, Clone)]
pub struct GaussianRatioLikelihood {
    target: Gaussian,
    prior: Gaussian,
}

impl GaussianRatioLikelihood {
    pub fn new(target: Gaussian, prior: Gaussian) -> Result<Self> {
        if target.dim() != prior.dim() {
            return Err(TargetError::DimensionMismatch("target and prior dimensions differ".into()));
        }
        Ok(Self { target, prior })
    }
}

impl LogLikelihood for GaussianRatioLikelihood {
    fn dim(&self) -> usize {
        self.target.dim()
    }

    fn log_likelihood(&self, x: &[f64]) -> f64 {
        self.target.log_pdf(x) - self.prior.log_pdf(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            self.target
                .grad_log_pdf(x)
                .into_iter()
                .zip(self.prior.grad_log_pdf(x))
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

/// Settings of the Lorenz-96 inference problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Lorenz96ExperimentConfig {
    /// Number of slow variables `K`.
    pub state_dim: usize,
    /// Forcing used for the ground truth.
    pub forcing: f64,
    pub two_scale: Option<TwoScale>,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    pub noise_variance: f64,
    pub prior_variance: f64,
}

impl Default for Lorenz96ExperimentConfig {
    fn default() -> Self {
        Self {
            state_dim: 36,
            forcing: 8.0,
            two_scale: None,
            t0: 0.0,
            t1: 10.0,
            step: 0.01,
            noise_variance: 0.1,
            prior_variance: 4.0,
        }
    }
}

impl Lorenz96ExperimentConfig {
    pub fn truth_params(&self) -> Result<Lorenz96Params> {
        let p = Lorenz96Params {
            k: self.state_dim,
            forcing: self.forcing,
            two_scale: self.two_scale,
        };
        p.validate()?;
        Ok(p)
    }

    /// Number of inferred parameters: the full initial state plus `F`.
    pub fn parameter_dim(&self) -> usize {
        self.truth_params().map_or(self.state_dim, |p| p.state_dim()) + 1
    }
}

/// Gaussian likelihood of observations around the forward solve started from
/// `x = (initial state, F)`.
#[derive(Debug)]
pub struct Lorenz96Likelihood {
    config: Lorenz96ExperimentConfig,
    template: Lorenz96Params,
    data: ObservationRecord,
    log_norm: f64,
    diverged: AtomicU64,
}

impl Lorenz96Likelihood {
    pub fn new(config: Lorenz96ExperimentConfig, data: ObservationRecord) -> Result<Self> {
        let template = config.truth_params()?;
        if !(config.noise_variance > 0.0) || !(config.prior_variance > 0.0) {
            return Err(TargetError::InvalidConfig(
                "noise and prior variances must be positive".into(),
            ));
        }
        let n = ode::step_count(config.t0, config.t1, config.step);
        if data.n_times() != n {
            return Err(TargetError::DimensionMismatch(format!(
                "data has {} observation times, the integration grid has {n}",
                data.n_times()
            )));
        }
        for (i, &t) in data.times.iter().enumerate() {
            let expect = ode::step_time(config.t0, config.t1, config.step, i + 1, n);
            if (t - expect).abs() > 1e-9 * expect.abs().max(1.0) {
                return Err(TargetError::DimensionMismatch(format!(
                    "observation time {t} does not match grid time {expect}"
                )));
            }
        }
        if data.values.iter().any(|r| r.len() != template.state_dim()) {
            return Err(TargetError::DimensionMismatch(format!(
                "observations must have {} components",
                template.state_dim()
            )));
        }
        let log_norm = -0.5 * data.n_observations() as f64 * (2.0 * PI * config.noise_variance).ln();
        Ok(Self {
            config,
            template,
            data,
            log_norm,
            diverged: AtomicU64::new(0),
        })
    }

    pub fn data(&self) -> &ObservationRecord {
        &self.data
    }

    pub fn config(&self) -> &Lorenz96ExperimentConfig {
        &self.config
    }

    /// Number of evaluations whose forward solve diverged.
    pub fn divergence_count(&self) -> u64 {
        self.diverged.load(Ordering::Relaxed)
    }

    /// Maximum attainable value: all residuals zero.
    pub fn max_log_likelihood(&self) -> f64 {
        self.log_norm
    }

    pub fn forward_solve(&self, x: &[f64]) -> Option<ode::Trajectory> {
        let dim = self.template.state_dim();
        let params = Lorenz96Params {
            forcing: x[dim],
            ..self.template
        };
        let traj = ode::integrate(&params, &x[..dim], self.config.t0, self.config.t1, self.config.step).ok()?;
        if traj.diverged {
            None
        } else {
            Some(traj)
        }
    }
}

impl LogLikelihood for Lorenz96Likelihood {
    fn dim(&self) -> usize {
        self.template.state_dim() + 1
    }

    fn log_likelihood(&self, x: &[f64]) -> f64 {
        if x.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let Some(traj) = self.forward_solve(x) else {
            self.diverged.fetch_add(1, Ordering::Relaxed);
            return f64::NEG_INFINITY;
        };
        let mut ss = 0.0;
        for (state, obs) in traj.states[1..].iter().zip(&self.data.values) {
            for (s, d) in state.iter().zip(obs) {
                ss += (d - s) * (d - s);
            }
        }
        self.log_norm - 0.5 * ss / self.config.noise_variance
    }
}

pub type Lorenz96Posterior = Posterior<Lorenz96Likelihood>;

/// Posterior over `(initial state, F)` with an isotropic Gaussian prior.
pub fn make_lorenz96_posterior(
    config: Lorenz96ExperimentConfig,
    data: ObservationRecord,
) -> Result<Lorenz96Posterior> {
    let prior_variance = config.prior_variance;
    let likelihood = Lorenz96Likelihood::new(config, data)?;
    let prior = Gaussian::isotropic(vec![0.0; likelihood.dim()], prior_variance)?;
    Posterior::new(prior, likelihood)
}

/// Wraps a model and counts every `log_density` call.
#[derive(Debug)]
pub struct Counted<D> {
    inner: D,
    count: AtomicU64,
}

impl<D: DensityModel> Counted<D> {
    pub fn new(inner: D) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &D {
        &self.inner
    }
}

impl<D: DensityModel> DensityModel for Counted<D> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.log_density(x)
    }
    fn log_prior(&self, x: &[f64]) -> Option<f64> {
        self.inner.log_prior(x)
    }
    fn log_likelihood(&self, x: &[f64]) -> Option<f64> {
        self.inner.log_likelihood(x)
    }
    fn loglik_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner.loglik_gradient(x)
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        self.inner.sample(rng)
    }
}

/// Adds a constant to another model's log-density (an unnormalized rescaling).
#[derive(Debug, Clone)]
pub struct Shifted<D> {
    pub inner: D,
    pub log_scale: f64,
}

impl<D: DensityModel> DensityModel for Shifted<D> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn log_density(&self, x: &[f64]) -> f64 {
        self.inner.log_density(x) + self.log_scale
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Option<Vec<f64>> {
        self.inner.sample(rng)
    }
}
