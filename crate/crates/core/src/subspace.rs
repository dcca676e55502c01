//! Active/inactive subspace decompositions of `R^m`.
//!
//! Basis matrices store basis vectors as columns: `y = B_aᵀ x`, `z = B_iᵀ x`
//! and `x = B_a y + B_i z`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{
    self, complete_orthonormal_basis, least_squares_fit, symmetric_eigendecompose, weighted_mean_covariance,
    LinalgError, Matrix, ORTHONORMAL_TOLERANCE,
};
use crate::rng::StreamKey;
use crate::targets::DensityModel;

#[derive(Debug, Error)]
pub enum SubspaceError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("spectral gap needs at least 2 eigenvalues, got {0}")]
    TooFewEigenvalues(usize),
    #[error("eigenvalues must be finite, non-negative and sorted descending: {0}")]
    InvalidEigenvalues(String),
    #[error("active dimension {requested} is invalid for ambient dimension {ambient}")]
    InvalidActiveDim { requested: usize, ambient: usize },
    #[error("gradient is not finite at {point:?}")]
    NonFiniteGradient { point: Vec<f64> },
    #[error("the model provides no log-likelihood gradient")]
    NoGradient,
    #[error("the model cannot draw exact samples")]
    NoSampler,
    #[error("prior density is zero or not finite at {point:?}")]
    InvalidPriorDensity { point: Vec<f64> },
    #[error("all importance weights are zero: the prior sampler misses the posterior mass, use a broader prior sampler")]
    DegenerateWeights,
    #[error("scalar field is not finite or negative at {point:?}")]
    InvalidField { point: Vec<f64> },
    #[error("regression coefficients vanish: the field is constant on the construction points")]
    ZeroCoefficients,
    #[error("need at least {needed} construction points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("subspace artifact, line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, SubspaceError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceMethod {
    GradientCovariance,
    PosteriorCovariance,
    LinearRegression,
    /// Bases supplied directly rather than estimated.
    Manual,
}

impl SubspaceMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::GradientCovariance => "gradient_covariance",
            Self::PosteriorCovariance => "posterior_covariance",
            Self::LinearRegression => "linear_regression",
            Self::Manual => "manual",
        }
    }
}

impl fmt::Display for SubspaceMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubspaceMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "gradient_covariance" => Ok(Self::GradientCovariance),
            "posterior_covariance" => Ok(Self::PosteriorCovariance),
            "linear_regression" => Ok(Self::LinearRegression),
            "manual" => Ok(Self::Manual),
            other => Err(format!(
                "unknown subspace method `{other}` (expected gradient_covariance, posterior_covariance, linear_regression or manual)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralGap {
    /// Number of leading eigenvalues kept.
    pub cut_index: usize,
    pub gap_ratio: f64,
}

/// How the active dimension is chosen for eigenvalue-based constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActiveDim {
    #[default]
    Detect,
    DetectAtMost(usize),
    Fixed(usize),
}

impl From<Option<usize>> for ActiveDim {
    fn from(v: Option<usize>) -> Self {
        v.map_or(Self::Detect, Self::Fixed)
    }
}

/// Picks the cut maximizing `λ_k / max(λ_{k+1}, 1e-12 λ_1)`, ties to smaller `k`.
pub fn detect_spectral_gap(eigenvalues: &[f64], max_active_dim: Option<usize>) -> Result<SpectralGap> {
    let len = eigenvalues.len();
    if len < 2 {
        return Err(SubspaceError::TooFewEigenvalues(len));
    }
    if let Some(v) = eigenvalues.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(SubspaceError::InvalidEigenvalues(format!("value {v}")));
    }
    if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
        return Err(SubspaceError::InvalidEigenvalues("not sorted descending".into()));
    }
    if max_active_dim == Some(0) {
        return Err(SubspaceError::InvalidActiveDim {
            requested: 0,
            ambient: len,
        });
    }
    let lead = eigenvalues[0];
    if lead == 0.0 {
        return Ok(SpectralGap {
            cut_index: 1,
            gap_ratio: 1.0,
        });
    }
    let floor = 1e-12 * lead;
    let last = max_active_dim.map_or(len - 1, |m| m.min(len - 1));
    let mut best = SpectralGap {
        cut_index: 1,
        gap_ratio: f64::NEG_INFINITY,
    };
    for k in 1..=last {
        let ratio = eigenvalues[k - 1] / eigenvalues[k].max(floor);
        if ratio > best.gap_ratio {
            best = SpectralGap {
                cut_index: k,
                gap_ratio: ratio,
            };
        }
    }
    best.gap_ratio = best.gap_ratio.max(1.0);
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSubspace {
    active: Matrix,
    inactive: Matrix,
    eigenvalues: Vec<f64>,
    method: SubspaceMethod,
    gap: Option<SpectralGap>,
    center: Option<Vec<f64>>,
}

impl ActiveSubspace {
    /// Validates that `[active | inactive]` is an orthonormal basis of `R^m`
    /// with `1 ≤ n < m`.
    pub fn from_bases(
        active: Matrix,
        inactive: Matrix,
        eigenvalues: Vec<f64>,
        method: SubspaceMethod,
        gap: Option<SpectralGap>,
    ) -> Result<Self> {
        let m = active.rows();
        let n = active.cols();
        if inactive.rows() != m || n + inactive.cols() != m {
            return Err(SubspaceError::DimensionMismatch(format!(
                "active basis {}x{n} and inactive basis {}x{} do not split R^{m}",
                m,
                inactive.rows(),
                inactive.cols()
            )));
        }
        if n == 0 || n >= m {
            return Err(SubspaceError::InvalidActiveDim {
                requested: n,
                ambient: m,
            });
        }
        if method == SubspaceMethod::LinearRegression && n != 1 {
            return Err(SubspaceError::InvalidActiveDim {
                requested: n,
                ambient: m,
            });
        }
        if !eigenvalues.is_empty() && eigenvalues.len() != m {
            return Err(SubspaceError::DimensionMismatch(format!(
                "{} eigenvalues for ambient dimension {m}",
                eigenvalues.len()
            )));
        }
        let full = active.hstack(&inactive)?;
        let deviation = full.gram().identity_deviation();
        if !(deviation <= ORTHONORMAL_TOLERANCE) {
            return Err(LinalgError::NotOrthonormal { deviation }.into());
        }
        Ok(Self {
            active,
            inactive,
            eigenvalues,
            method,
            gap,
            center: None,
        })
    }

    /// Attaches a reference point, such as the weighted mean of the construction.
    pub fn with_center(mut self, center: Vec<f64>) -> Result<Self> {
        if center.len() != self.ambient_dim() {
            return Err(SubspaceError::DimensionMismatch(format!(
                "center has {} entries, ambient dimension is {}",
                center.len(),
                self.ambient_dim()
            )));
        }
        self.center = Some(center);
        Ok(self)
    }

    pub fn center(&self) -> Option<&[f64]> {
        self.center.as_deref()
    }

    /// Active coordinates are the first `n` standard coordinates.
    pub fn coordinate(m: usize, n: usize) -> Result<Self> {
        if n == 0 || n >= m {
            return Err(SubspaceError::InvalidActiveDim {
                requested: n,
                ambient: m,
            });
        }
        let id = Matrix::identity(m);
        let cols = id.columns();
        Self::from_bases(
            Matrix::from_columns(&cols[..n])?,
            Matrix::from_columns(&cols[n..])?,
            Vec::new(),
            SubspaceMethod::Manual,
            None,
        )
    }

    /// Splits an orthonormal eigenbasis after the first `n` columns.
    fn from_eigen(
        eigenvalues: Vec<f64>,
        vectors: &Matrix,
        dim: ActiveDim,
        method: SubspaceMethod,
    ) -> Result<Self> {
        let m = vectors.rows();
        let clamped: Vec<f64> = eigenvalues.iter().map(|v| v.max(0.0)).collect();
        let gap = detect_spectral_gap(
            &clamped,
            match dim {
                ActiveDim::DetectAtMost(k) => Some(k),
                _ => None,
            },
        )?;
        let n = match dim {
            ActiveDim::Fixed(k) => k,
            _ => gap.cut_index,
        };
        if n == 0 || n >= m {
            return Err(SubspaceError::InvalidActiveDim {
                requested: n,
                ambient: m,
            });
        }
        let cols = vectors.columns();
        Self::from_bases(
            Matrix::from_columns(&cols[..n])?,
            Matrix::from_columns(&cols[n..])?,
            eigenvalues,
            method,
            Some(gap),
        )
    }

    pub fn ambient_dim(&self) -> usize {
        self.active.rows()
    }

    pub fn active_dim(&self) -> usize {
        self.active.cols()
    }

    pub fn inactive_dim(&self) -> usize {
        self.inactive.cols()
    }

    pub fn active_basis(&self) -> &Matrix {
        &self.active
    }

    pub fn inactive_basis(&self) -> &Matrix {
        &self.inactive
    }

    /// Eigenvalues of the estimated matrix, descending; empty for regression.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn method(&self) -> SubspaceMethod {
        self.method
    }

    /// The gap detected on the eigenvalues, also when the cut was overridden.
    pub fn spectral_gap(&self) -> Option<SpectralGap> {
        self.gap
    }

    pub fn to_active(&self, x: &[f64]) -> Vec<f64> {
        self.active.transpose_mul_vec(x)
    }

    pub fn to_inactive(&self, x: &[f64]) -> Vec<f64> {
        self.inactive.transpose_mul_vec(x)
    }

    /// `B_a y + B_i z`.
    pub fn reconstruct(&self, y: &[f64], z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim()];
        self.reconstruct_into(y, z, &mut out);
        out
    }

    pub fn reconstruct_into(&self, y: &[f64], z: &[f64], out: &mut [f64]) {
        assert_eq!(y.len(), self.active_dim(), "active coordinate length");
        assert_eq!(z.len(), self.inactive_dim(), "inactive coordinate length");
        for (r, o) in out.iter_mut().enumerate() {
            let a = self.active.row(r);
            let b = self.inactive.row(r);
            *o = linalg::dot(a, y) + linalg::dot(b, z);
        }
    }

    /// `B_a B_aᵀ`.
    pub fn active_projector(&self) -> Matrix {
        self.active
            .matmul(&self.active.transpose())
            .expect("conformant shapes")
    }

    /// Writes the text artifact read back by [`ActiveSubspace::parse`].
    pub fn to_artifact(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        writeln!(s, "method = {}", self.method).unwrap();
        writeln!(s, "ambient_dim = {}", self.ambient_dim()).unwrap();
        writeln!(s, "active_dim = {}", self.active_dim()).unwrap();
        writeln!(s, "eigenvalues = {}", join(&self.eigenvalues)).unwrap();
        if let Some(g) = self.gap {
            writeln!(s, "gap_cut = {}", g.cut_index).unwrap();
            writeln!(s, "gap_ratio = {:?}", g.gap_ratio).unwrap();
        }
        if let Some(c) = &self.center {
            writeln!(s, "center = {}", join(c)).unwrap();
        }
        for (name, m) in [("active", &self.active), ("inactive", &self.inactive)] {
            writeln!(s, "[{name}]").unwrap();
            for r in 0..m.rows() {
                writeln!(s, "{}", join(m.row(r))).unwrap();
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| SubspaceError::Parse { line, message };
        let mut method = None;
        let mut ambient = None;
        let mut active_dim = None;
        let mut eigenvalues = Vec::new();
        let mut gap_cut = None;
        let mut gap_ratio = None;
        let mut center = None;
        let mut block: Option<&str> = None;
        let mut active_rows: Vec<Vec<f64>> = Vec::new();
        let mut inactive_rows: Vec<Vec<f64>> = Vec::new();

        let parse_floats = |line: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| err(line, format!("bad number `{t}`: {e}"))))
                .collect()
        };

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if t == "[active]" {
                block = Some("active");
                continue;
            }
            if t == "[inactive]" {
                block = Some("inactive");
                continue;
            }
            match block {
                Some("active") => active_rows.push(parse_floats(line, t)?),
                Some(_) => inactive_rows.push(parse_floats(line, t)?),
                None => {
                    let (key, value) = t
                        .split_once('=')
                        .ok_or_else(|| err(line, format!("expected `key = value`, got `{t}`")))?;
                    let value = value.trim();
                    let usize_of = |v: &str| v.parse::<usize>().map_err(|e| err(line, format!("bad count `{v}`: {e}")));
                    match key.trim() {
                        "method" => method = Some(value.parse::<SubspaceMethod>().map_err(|e| err(line, e))?),
                        "ambient_dim" => ambient = Some(usize_of(value)?),
                        "active_dim" => active_dim = Some(usize_of(value)?),
                        "eigenvalues" => eigenvalues = parse_floats(line, value)?,
                        "center" => center = Some(parse_floats(line, value)?),
                        "gap_cut" => gap_cut = Some(usize_of(value)?),
                        "gap_ratio" => {
                            gap_ratio = Some(
                                value
                                    .parse::<f64>()
                                    .map_err(|e| err(line, format!("bad number `{value}`: {e}")))?,
                            )
                        }
                        other => return Err(err(line, format!("unknown key `{other}`"))),
                    }
                }
            }
        }
        let method = method.ok_or_else(|| err(0, "missing key `method`".into()))?;
        let m = ambient.ok_or_else(|| err(0, "missing key `ambient_dim`".into()))?;
        let n = active_dim.ok_or_else(|| err(0, "missing key `active_dim`".into()))?;
        if active_rows.len() != m || inactive_rows.len() != m {
            return Err(err(0, format!("basis blocks must have {m} rows each")));
        }
        if active_rows.iter().any(|r| r.len() != n) || inactive_rows.iter().any(|r| r.len() + n != m) {
            return Err(err(0, "basis rows have the wrong length".into()));
        }
        let gap = match (gap_cut, gap_ratio) {
            (Some(cut_index), Some(gap_ratio)) => Some(SpectralGap { cut_index, gap_ratio }),
            (None, None) => None,
            _ => return Err(err(0, "gap_cut and gap_ratio must appear together".into())),
        };
        let inactive = if n == m {
            Matrix::zeros(m, 0)
        } else {
            Matrix::from_rows(&inactive_rows)?
        };
        let subspace = Self::from_bases(Matrix::from_rows(&active_rows)?, inactive, eigenvalues, method, gap)?;
        match center {
            Some(c) => subspace.with_center(c),
            None => Ok(subspace),
        }
    }
}

/// Draws `count` points from the model's exact sampler, one substream per point.
pub fn draw_points(sampler: &dyn DensityModel, count: usize, stream: StreamKey) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .map(|i| {
            let mut rng = stream.child(i as u64).rng();
            sampler.sample(&mut rng).ok_or(SubspaceError::NoSampler)
        })
        .collect()
}

/// Estimates `E[∇ log ρ_l ∇ log ρ_lᵀ]` from gradients at the given points.
pub fn gradient_covariance_from_points<G>(gradient: G, points: &[Vec<f64>], dim: ActiveDim) -> Result<ActiveSubspace>
where
    G: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    let m = points.first().map(Vec::len).ok_or(SubspaceError::TooFewPoints { needed: 1, got: 0 })?;
    if points.len() < m {
        log::warn!("gradient covariance from {} points in dimension {m}", points.len());
    }
    let grads: Vec<Option<Vec<f64>>> = points.par_iter().map(|p| gradient(p)).collect();
    let mut cov = Matrix::zeros(m, m);
    let scale = 1.0 / points.len() as f64;
    for (p, g) in points.iter().zip(grads) {
        let g = g.ok_or(SubspaceError::NoGradient)?;
        if g.len() != m {
            return Err(SubspaceError::DimensionMismatch(format!("gradient has length {}, expected {m}", g.len())));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(SubspaceError::NonFiniteGradient { point: p.clone() });
        }
        for a in 0..m {
            for b in a..m {
                cov[(a, b)] += scale * g[a] * g[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    let eig = symmetric_eigendecompose(&cov)?;
    ActiveSubspace::from_eigen(eig.eigenvalues, &eig.eigenvectors, dim, SubspaceMethod::GradientCovariance)
}

/// Gradient-covariance construction with `count` prior draws.
pub fn construct_gradient_covariance(
    target: &dyn DensityModel,
    prior: &dyn DensityModel,
    count: usize,
    dim: ActiveDim,
    stream: StreamKey,
) -> Result<ActiveSubspace> {
    let points = draw_points(prior, count, stream)?;
    gradient_covariance_from_points(|x| target.loglik_gradient(x), &points, dim)
}

/// Posterior-covariance construction together with the weighted mean.
#[derive(Debug, Clone)]
pub struct PosteriorCovarianceFit {
    pub subspace: ActiveSubspace,
    pub mean: Vec<f64>,
    /// `(Σ v)² / Σ v²` of the importance weights.
    pub effective_sample_size: f64,
}

/// Self-normalized importance estimate of the target covariance from points
/// drawn from `prior`, with weights `ρ(x) / ρ_p(x)`.
pub fn posterior_covariance_from_points(
    target: &dyn DensityModel,
    prior: &dyn DensityModel,
    points: &[Vec<f64>],
    dim: ActiveDim,
) -> Result<PosteriorCovarianceFit> {
    if points.len() < 2 {
        return Err(SubspaceError::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    let evals: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| (target.log_density(p), prior.log_density(p)))
        .collect();
    let mut log_w = Vec::with_capacity(points.len());
    for (p, (lt, lp)) in points.iter().zip(evals) {
        if !lp.is_finite() {
            return Err(SubspaceError::InvalidPriorDensity { point: p.clone() });
        }
        log_w.push(lt - lp);
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(SubspaceError::DegenerateWeights);
    }
    let weights: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    let (mean, cov) = weighted_mean_covariance(points, &weights).map_err(|e| match e {
        LinalgError::DegenerateWeights => SubspaceError::DegenerateWeights,
        other => other.into(),
    })?;
    let eig = symmetric_eigendecompose(&cov)?;
    let subspace =
        ActiveSubspace::from_eigen(eig.eigenvalues, &eig.eigenvectors, dim, SubspaceMethod::PosteriorCovariance)?
            .with_center(mean.clone())?;
    Ok(PosteriorCovarianceFit {
        subspace,
        mean,
        effective_sample_size: sum * sum / sum_sq,
    })
}

/// Posterior-covariance construction with `count` prior draws.
pub fn construct_posterior_covariance(
    target: &dyn DensityModel,
    prior: &dyn DensityModel,
    count: usize,
    dim: ActiveDim,
    stream: StreamKey,
) -> Result<PosteriorCovarianceFit> {
    let points = draw_points(prior, count, stream)?;
    posterior_covariance_from_points(target, prior, &points, dim)
}

/// Fits `field(x) ≈ a·x + b` and takes `a / ‖a‖` as the single active direction.
pub fn linear_regression_from_points<F>(field: F, points: &[Vec<f64>]) -> Result<ActiveSubspace>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let values: Vec<f64> = points.par_iter().map(|p| field(p)).collect();
    for (p, v) in points.iter().zip(&values) {
        if !v.is_finite() || *v < 0.0 {
            return Err(SubspaceError::InvalidField { point: p.clone() });
        }
    }
    let fit = least_squares_fit(points, &values)?;
    let len = linalg::norm(&fit.coefficients);
    let m = fit.coefficients.len();
    let spread = (0..m)
        .map(|j| {
            let mean = points.iter().map(|p| p[j]).sum::<f64>() / points.len() as f64;
            (points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / points.len() as f64).sqrt()
        })
        .fold(0.0_f64, f64::max);
    let size = values.iter().copied().fold(0.0_f64, f64::max);
    if !(len > 0.0) || len * spread <= 1e-12 * size {
        return Err(SubspaceError::ZeroCoefficients);
    }
    let direction: Vec<f64> = fit.coefficients.iter().map(|c| c / len).collect();
    let active = Matrix::from_columns(&[direction])?;
    let inactive = complete_orthonormal_basis(&active)?;
    ActiveSubspace::from_bases(active, inactive, Vec::new(), SubspaceMethod::LinearRegression, None)
}

/// Regression construction on the density `ρ` at `count` draws from `sampler`.
pub fn construct_linear_regression(
    target: &dyn DensityModel,
    sampler: &dyn DensityModel,
    count: usize,
    stream: StreamKey,
) -> Result<ActiveSubspace> {
    let points = draw_points(sampler, count, stream)?;
    linear_regression_from_points(|x| target.log_density(x).exp(), &points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{Gaussian, make_mixture_experiment_target, MixtureVariant};

    fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
        let c = linalg::dot(a, b).abs() / (linalg::norm(a) * linalg::norm(b));
        c.min(1.0).acos().to_degrees()
    }

    #[test]
    fn gap_examples() {
        let g = detect_spectral_gap(&[10.0, 9.0, 8.0, 7.5, 0.1, 0.05], None).unwrap();
        assert_eq!(g.cut_index, 4);
        assert!((g.gap_ratio - 75.0).abs() < 1e-9);
        let g = detect_spectral_gap(&[25.0, 0.0], None).unwrap();
        assert_eq!(g.cut_index, 1);
        assert!((g.gap_ratio - 1e12).abs() < 1.0);
        let g = detect_spectral_gap(&[10.0, 9.0, 8.0, 7.5, 0.1, 0.05], Some(2)).unwrap();
        assert_eq!(g.cut_index, 2);
        assert!(detect_spectral_gap(&[1.0], None).is_err());
        assert!(detect_spectral_gap(&[1.0, 2.0], None).is_err());
        let ties = detect_spectral_gap(&[4.0, 2.0, 1.0], None).unwrap();
        assert_eq!(ties.cut_index, 1);
        let zero = detect_spectral_gap(&[0.0, 0.0, 0.0], None).unwrap();
        assert_eq!((zero.cut_index, zero.gap_ratio), (1, 1.0));
    }

    #[test]
    fn linear_loglik_gradient_covariance() {
        let points: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, -(i as f64) * 0.5]).collect();
        let s = gradient_covariance_from_points(|_| Some(vec![3.0, 4.0]), &points, ActiveDim::Detect).unwrap();
        assert_eq!(s.active_dim(), 1);
        let v = s.active_basis().column(0);
        assert!((v[0] - 0.6).abs() < 1e-12 && (v[1] - 0.8).abs() < 1e-12);
        assert!((s.eigenvalues()[0] - 25.0).abs() < 1e-10);
    }

    #[test]
    fn single_point_gradient_covariance_is_rank_one() {
        let s = gradient_covariance_from_points(|x| Some(vec![x[0], 2.0, -1.0]), &[vec![1.5, 0.0, 0.0]], ActiveDim::Detect).unwrap();
        assert_eq!(s.active_dim(), 1);
        assert!(s.eigenvalues()[1].abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_reports_point() {
        let r = gradient_covariance_from_points(|_| Some(vec![f64::NAN, 0.0]), &[vec![1.0, 2.0]], ActiveDim::Detect);
        assert!(matches!(r, Err(SubspaceError::NonFiniteGradient { point }) if point == vec![1.0, 2.0]));
    }

    #[test]
    fn isotropic_quadratic_has_no_meaningful_gap() {
        let prior = Gaussian::standard(3);
        let pts = draw_points(&prior, 4000, StreamKey::root(11)).unwrap();
        let s = gradient_covariance_from_points(|x| Some(x.iter().map(|v| -v).collect()), &pts, ActiveDim::Fixed(1)).unwrap();
        let ev = s.eigenvalues();
        assert!(ev[0] - ev[2] < 0.1 * 3.0_f64.max(ev[0]) + 0.1, "{ev:?}");
        assert!(s.spectral_gap().unwrap().gap_ratio < 1.2);
        assert_eq!(s.active_dim(), 1);
    }

    #[test]
    fn target_equal_to_prior_gives_sample_covariance() {
        let prior = Gaussian::isotropic(vec![0.0; 2], 2.0).unwrap();
        let pts = draw_points(&prior, 50, StreamKey::root(1)).unwrap();
        let fit = posterior_covariance_from_points(&prior, &prior, &pts, ActiveDim::Detect).unwrap();
        let (mean, _) = weighted_mean_covariance(&pts, &vec![1.0; 50]).unwrap();
        for (a, b) in fit.mean.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((fit.effective_sample_size - 50.0).abs() < 1e-9);
    }

    #[test]
    fn anisotropic_gaussian_posterior_covariance() {
        let target = Gaussian::diagonal(vec![0.0, 0.0], vec![10.0, 0.1]).unwrap();
        let prior = Gaussian::isotropic(vec![0.0, 0.0], 25.0).unwrap();
        let fit = construct_posterior_covariance(&target, &prior, 2000, ActiveDim::Detect, StreamKey::root(5)).unwrap();
        let v = fit.subspace.active_basis().column(0);
        assert!(angle_deg(&v, &[1.0, 0.0]) < 5.0);
    }

    #[test]
    fn mixture_posterior_covariance_finds_mode_axis() {
        let target = make_mixture_experiment_target(MixtureVariant::TwoD);
        let prior = Gaussian::isotropic(vec![0.0, 0.0], 10.0).unwrap();
        let fit = construct_posterior_covariance(&target, &prior, 500, ActiveDim::Detect, StreamKey::root(9)).unwrap();
        let v = fit.subspace.active_basis().column(0);
        assert!(angle_deg(&v, &[1.0, 1.0]) < 10.0);
    }

    #[test]
    fn missing_posterior_mass_is_degenerate() {
        struct Null;
        impl DensityModel for Null {
            fn dim(&self) -> usize {
                2
            }
            fn log_density(&self, _: &[f64]) -> f64 {
                f64::NEG_INFINITY
            }
        }
        let prior = Gaussian::standard(2);
        let pts = draw_points(&prior, 10, StreamKey::root(1)).unwrap();
        assert!(matches!(
            posterior_covariance_from_points(&Null, &prior, &pts, ActiveDim::Detect),
            Err(SubspaceError::DegenerateWeights)
        ));
    }

    #[test]
    fn exactly_linear_field() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                pts.push(vec![i as f64, j as f64]);
            }
        }
        let s = linear_regression_from_points(|x| 2.0 * x[0] + 1.0, &pts).unwrap();
        let a = s.active_basis().column(0);
        let b = s.inactive_basis().column(0);
        assert!((a[0].abs() - 1.0).abs() < 1e-10 && a[1].abs() < 1e-10);
        assert!((b[1].abs() - 1.0).abs() < 1e-10 && b[0].abs() < 1e-10);
    }

    #[test]
    fn regression_failures() {
        let same = vec![vec![1.0, 1.0]; 10];
        assert!(linear_regression_from_points(|x| x[0], &same).is_err());
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * i) as f64]).collect();
        assert!(matches!(
            linear_regression_from_points(|_| 3.0, &pts),
            Err(SubspaceError::ZeroCoefficients)
        ));
    }

    #[test]
    fn artifact_round_trip() {
        let target = Gaussian::diagonal(vec![0.0; 3], vec![10.0, 1.0, 0.1]).unwrap();
        let prior = Gaussian::isotropic(vec![0.0; 3], 25.0).unwrap();
        let fit = construct_posterior_covariance(&target, &prior, 300, ActiveDim::Detect, StreamKey::root(2)).unwrap();
        let text = fit.subspace.to_artifact();
        let back = ActiveSubspace::parse(&text).unwrap();
        assert_eq!(back, fit.subspace);

        let reg = ActiveSubspace::coordinate(3, 2).unwrap();
        assert_eq!(ActiveSubspace::parse(&reg.to_artifact()).unwrap(), reg);
        assert!(ActiveSubspace::parse("method = manual\nbogus = 1\n").is_err());
    }

    #[test]
    fn invalid_bases_are_rejected() {
        let a = Matrix::from_columns(&[vec![1.0, 1.0]]).unwrap();
        let b = Matrix::from_columns(&[vec![1.0, -1.0]]).unwrap();
        assert!(ActiveSubspace::from_bases(a, b, vec![], SubspaceMethod::Manual, None).is_err());
        assert!(ActiveSubspace::coordinate(2, 2).is_err());
        assert!(ActiveSubspace::coordinate(2, 0).is_err());
    }

    #[test]
    fn coordinates_round_trip() {
        let s = ActiveSubspace::coordinate(4, 2).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = s.to_active(&x);
        let z = s.to_inactive(&x);
        assert_eq!(y, vec![1.0, 2.0]);
        assert_eq!(s.reconstruct(&y, &z), x.to_vec());
    }
}
