//! Chain diagnostics: autocorrelation, effective sample size, weighted Gaussian
//! kernel density estimates and mode occupancy, plus their CSV forms.

use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("chain is empty")]
    EmptyChain,
    #[error("every dimension of the chain is constant")]
    ConstantChain,
    #[error("max lag {max_lag} needs 1 ≤ lag < chain length {len}")]
    InvalidLag { max_lag: usize, len: usize },
    #[error("total weight is zero")]
    ZeroWeight,
    #[error("invalid weight {0}")]
    InvalidWeight(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("need at least one mode center")]
    NoModes,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DiagnosticsError>;

/// Maximum autocorrelation across dimensions at lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrelationCurve {
    pub values: Vec<f64>,
}

impl AutocorrelationCurve {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    /// Largest value over lags `from..=to`.
    pub fn max_over(&self, from: usize, to: usize) -> f64 {
        self.values[from..=to.min(self.max_lag())]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `lag,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["lag", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([k.to_string(), v.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Every `k`-th row, starting with the first.
pub fn thin<T: Clone>(rows: &[T], k: usize) -> Vec<T> {
    rows.iter().step_by(k.max(1)).cloned().collect()
}

fn column(chain: &[Vec<f64>], d: usize) -> Vec<f64> {
    chain.iter().map(|r| r[d]).collect()
}

/// Centered series and its lag-0 autocovariance (1/N normalization).
fn centered(series: &[f64]) -> (Vec<f64>, f64) {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let c: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = c.iter().map(|v| v * v).sum::<f64>() / n;
    (c, c0)
}

fn autocov(c: &[f64], k: usize) -> f64 {
    c[..c.len() - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum::<f64>() / c.len() as f64
}

/// Sample autocorrelation of one series at lags `0..=max_lag`, or `None` for a
/// constant series.
pub fn series_autocorrelation(series: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let (c, c0) = centered(series);
    if !(c0 > 0.0) {
        return None;
    }
    Some(
        (0..=max_lag)
            .map(|k| if k == 0 { 1.0 } else { (autocov(&c, k) / c0).clamp(-1.0, 1.0) })
            .collect(),
    )
}

/// Per-dimension autocorrelation reduced by the maximum at each lag. Constant
/// dimensions are skipped with a warning.
pub fn autocorrelation(chain: &[Vec<f64>], max_lag: usize) -> Result<AutocorrelationCurve> {
    let len = chain.len();
    if len == 0 {
        return Err(DiagnosticsError::EmptyChain);
    }
    if max_lag == 0 || max_lag >= len {
        return Err(DiagnosticsError::InvalidLag { max_lag, len });
    }
    let dim = chain[0].len();
    if chain.iter().any(|r| r.len() != dim) {
        return Err(DiagnosticsError::DimensionMismatch("rows of differing length".into()));
    }
    let mut values = vec![f64::NEG_INFINITY; max_lag + 1];
    let mut any = false;
    for d in 0..dim {
        match series_autocorrelation(&column(chain, d), max_lag) {
            Some(r) => {
                any = true;
                values.iter_mut().zip(r).for_each(|(v, x)| *v = v.max(x));
            }
            None => log::warn!("dimension {d} is constant and is excluded from the autocorrelation"),
        }
    }
    if !any {
        return Err(DiagnosticsError::ConstantChain);
    }
    Ok(AutocorrelationCurve { values })
}

/// Integrated autocorrelation time by the initial-positive-sequence rule:
/// `τ = -1 + 2 Σ_m (ρ_{2m} + ρ_{2m+1})`, summed while the pair sums stay
/// positive and floored at `1/N`.
pub fn integrated_autocorrelation_time(series: &[f64]) -> Option<f64> {
    let n = series.len();
    let (c, c0) = centered(series);
    if !(c0 > 0.0) || n < 2 {
        return None;
    }
    let rho = |k: usize| if k >= n { 0.0 } else { autocov(&c, k) / c0 };
    let mut sum = 0.0;
    let mut m = 0;
    while 2 * m < n {
        let pair = rho(2 * m) + rho(2 * m + 1);
        if !(pair > 0.0) {
            break;
        }
        sum += pair;
        m += 1;
    }
    Some((2.0 * sum - 1.0).max(1.0 / n as f64))
}

/// `N / τ` for one series; `0` for a constant series.
pub fn series_ess(series: &[f64]) -> f64 {
    integrated_autocorrelation_time(series).map_or(0.0, |tau| series.len() as f64 / tau)
}

/// Effective sample size per dimension. Constant dimensions report 0.
pub fn effective_sample_size(chain: &[Vec<f64>]) -> Result<Vec<f64>> {
    if chain.len() < 2 {
        return Err(DiagnosticsError::EmptyChain);
    }
    let dim = chain[0].len();
    let ess: Vec<f64> = (0..dim).map(|d| series_ess(&column(chain, d))).collect();
    if ess.iter().all(|e| *e == 0.0) {
        return Err(DiagnosticsError::ConstantChain);
    }
    Ok(ess)
}

/// Mean and autocorrelation-adjusted standard error `sd / sqrt(ESS)`.
pub fn mean_with_standard_error(series: &[f64]) -> (f64, f64) {
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let ess = series_ess(series);
    let se = if ess > 0.0 { (var / ess).sqrt() } else { f64::INFINITY };
    (mean, se)
}

/// Uniform grid along one axis, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo < hi) || count < 2 || !lo.is_finite() || !hi.is_finite() {
            return Err(DiagnosticsError::InvalidGrid(format!("[{lo}, {hi}] with {count} points")));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.lo + i as f64 * self.spacing()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bandwidth {
    /// `n_eff^(-1/(d+4)) σ̂` per dimension, `n_eff = (Σw)² / Σw²`.
    Scott,
    PerDimension(Vec<f64>),
}

/// Density values on a 1D or 2D grid, first axis outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeGrid {
    pub axes: Vec<Axis>,
    pub bandwidth: Vec<f64>,
    pub density: Vec<f64>,
}

impl KdeGrid {
    /// Riemann sum over the grid cells.
    pub fn mass(&self) -> f64 {
        let cell: f64 = self.axes.iter().map(Axis::spacing).product();
        self.density.iter().sum::<f64>() * cell
    }

    /// `x,density` or `x,y,density`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let xs = self.axes[0].points();
        if self.axes.len() == 1 {
            w.write_record(["x", "density"])?;
            for (x, d) in xs.iter().zip(&self.density) {
                w.write_record([x.to_string(), d.to_string()])?;
            }
        } else {
            let ys = self.axes[1].points();
            w.write_record(["x", "y", "density"])?;
            for (a, x) in xs.iter().enumerate() {
                for (b, y) in ys.iter().enumerate() {
                    let d = self.density[a * ys.len() + b];
                    w.write_record([x.to_string(), y.to_string(), d.to_string()])?;
                }
            }
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn check_weights(weights: &[f64], len: usize) -> Result<f64> {
    if weights.len() != len {
        return Err(DiagnosticsError::DimensionMismatch(format!("{} weights for {len} points", weights.len())));
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(DiagnosticsError::InvalidWeight(*w));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(DiagnosticsError::ZeroWeight);
    }
    Ok(total)
}

/// Weighted product-Gaussian kernel density estimate on a grid.
pub fn gaussian_kde(points: &[Vec<f64>], weights: &[f64], axes: &[Axis], bandwidth: &Bandwidth) -> Result<KdeGrid> {
    let d = axes.len();
    if !(1..=2).contains(&d) {
        return Err(DiagnosticsError::InvalidGrid(format!("{d} axes; only 1 or 2 are supported")));
    }
    if points.is_empty() {
        return Err(DiagnosticsError::EmptyChain);
    }
    if points.iter().any(|p| p.len() != d) {
        return Err(DiagnosticsError::DimensionMismatch(format!("points must have {d} coordinates")));
    }
    let total = check_weights(weights, points.len())?;
    let norm: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let h: Vec<f64> = match bandwidth {
        Bandwidth::PerDimension(h) => {
            if h.len() != d || h.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(DiagnosticsError::InvalidBandwidth(format!("{h:?}")));
            }
            h.clone()
        }
        Bandwidth::Scott => {
            let n_eff = 1.0 / norm.iter().map(|w| w * w).sum::<f64>();
            let factor = n_eff.powf(-1.0 / (d as f64 + 4.0));
            (0..d)
                .map(|k| {
                    let mean: f64 = points.iter().zip(&norm).map(|(p, w)| w * p[k]).sum();
                    let var: f64 = points.iter().zip(&norm).map(|(p, w)| w * (p[k] - mean).powi(2)).sum();
                    let h = factor * var.sqrt();
                    if h > 0.0 {
                        Ok(h)
                    } else {
                        Err(DiagnosticsError::InvalidBandwidth(format!(
                            "zero spread along dimension {k}; give an explicit bandwidth"
                        )))
                    }
                })
                .collect::<Result<_>>()?
        }
    };

    let grids: Vec<Vec<f64>> = axes.iter().map(Axis::points).collect();
    let kernel = |u: f64, h: f64| (-0.5 * (u / h).powi(2)).exp() / (h * (2.0 * std::f64::consts::PI).sqrt());
    let cells: usize = grids.iter().map(Vec::len).product();
    let mut density = vec![0.0; cells];
    for (p, &w) in points.iter().zip(&norm) {
        if w == 0.0 {
            continue;
        }
        let kx: Vec<f64> = grids[0].iter().map(|g| kernel(g - p[0], h[0])).collect();
        if d == 1 {
            density.iter_mut().zip(&kx).for_each(|(v, k)| *v += w * k);
        } else {
            let ky: Vec<f64> = grids[1].iter().map(|g| kernel(g - p[1], h[1])).collect();
            for (a, kxa) in kx.iter().enumerate() {
                let wa = w * kxa;
                if wa == 0.0 {
                    continue;
                }
                let row = &mut density[a * ky.len()..(a + 1) * ky.len()];
                row.iter_mut().zip(&ky).for_each(|(v, k)| *v += wa * k);
            }
        }
    }
    Ok(KdeGrid {
        axes: axes.to_vec(),
        bandwidth: h,
        density,
    })
}

/// Weight fraction of samples nearest to each center (ties to the lower index).
pub fn mode_occupancy(points: &[Vec<f64>], weights: &[f64], centers: &[Vec<f64>]) -> Result<Vec<f64>> {
    if centers.is_empty() {
        return Err(DiagnosticsError::NoModes);
    }
    let total = check_weights(weights, points.len())?;
    let mut mass = vec![0.0; centers.len()];
    for (p, w) in points.iter().zip(weights) {
        if centers.iter().any(|c| c.len() != p.len()) {
            return Err(DiagnosticsError::DimensionMismatch("centers and points differ in dimension".into()));
        }
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (i, c) in centers.iter().enumerate() {
            let dist: f64 = p.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum();
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
        mass[best] += w;
    }
    Ok(mass.into_iter().map(|m| m / total).collect())
}

/// `mode,fraction`, modes numbered from 1.
pub fn write_occupancy_csv<W: Write>(fractions: &[f64], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["mode", "fraction"])?;
    for (i, f) in fractions.iter().enumerate() {
        w.write_record([(i + 1).to_string(), f.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_value_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}
