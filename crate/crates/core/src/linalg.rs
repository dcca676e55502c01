//! Small dense linear algebra: a row-major [`Matrix`], cyclic Jacobi
//! eigendecomposition for symmetric matrices, Gram-Schmidt basis completion,
//! Cholesky factorization, weighted moments and ordinary least squares.
//!
//! Everything here is sized for problems with at most a few dozen dimensions.

use std::fmt;

use thiserror::Error;

/// Sweep cap for the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm (relative to `‖A‖_F`) at which Jacobi stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
/// Relative tolerance for the symmetry precondition.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;
/// Tolerance for accepting a set of columns as orthonormal.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;
/// Candidates shorter than this after projection are skipped during completion.
pub const COMPLETION_NORM_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("Jacobi eigensolver did not converge within the cap of {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("columns are not orthonormal: Gram matrix deviates from identity by {deviation:e}")]
    NotOrthonormal { deviation: f64 },
    #[error("cannot complete a basis: {0}")]
    Completion(String),
    #[error("importance sample is degenerate: weights sum to zero")]
    DegenerateWeights,
    #[error("invalid weight {value} at index {index}: weights must be finite and non-negative")]
    InvalidWeight { index: usize, value: f64 },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("design matrix is rank deficient ({0}); use more or better-spread points")]
    RankDeficient(String),
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Dense real matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(LinalgError::DimensionMismatch("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), ncols, rows.concat())
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let nrows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != nrows) {
            return Err(LinalgError::DimensionMismatch("ragged columns".into()));
        }
        let mut m = Self::zeros(nrows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        if let Some(pos) = m.data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: pos / m.cols,
                col: pos % m.cols,
            });
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "mul_vec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`.
    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "transpose_mul_vec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * xi;
            }
        }
        out
    }

    /// `AᵀA`, the Gram matrix of the columns.
    pub fn gram(&self) -> Matrix {
        let mut g = Self::zeros(self.cols, self.cols);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..self.cols {
                for b in a..self.cols {
                    g[(a, b)] += r[a] * r[b];
                }
            }
        }
        for a in 0..self.cols {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "hstack of {} and {} rows",
                self.rows, other.rows
            )));
        }
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)];
            }
        }
        Ok(out)
    }

    /// Largest absolute deviation of `self` from the identity.
    pub fn identity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((self[(i, j)] - target).abs());
            }
        }
        dev
    }

    fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(LinalgError::NonFinite {
                row: pos / self.cols,
                col: pos % self.cols,
            }),
            None => Ok(()),
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a ⊗ a`.
pub fn outer(a: &[f64]) -> Matrix {
    let n = a.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[i] * a[j];
        }
    }
    m
}

/// Eigenvalues sorted non-increasing with eigenvectors stored as matching columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
    /// Number of Jacobi sweeps that were needed.
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n)
                    .map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)])
                    .sum();
            }
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps visit the strict upper triangle in row order, so identical input gives
/// bit-identical output. Each eigenvector is signed so that its first nonzero
/// component is positive.
pub fn symmetric_eigendecompose(a: &Matrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    a.check_finite()?;
    let n = a.rows;
    let scale = a.max_abs();
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (a[(i, j)] - a[(j, i)]).abs();
            if diff > SYMMETRY_TOLERANCE * scale {
                return Err(LinalgError::NotSymmetric {
                    row: i,
                    col: j,
                    diff,
                });
            }
        }
    }

    // Work on the symmetrized copy.
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    let mut v = Matrix::identity(n);
    let threshold = JACOBI_TOLERANCE * w.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&w);
        if off <= threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| w[(k, k)]).collect();
    let mut eigenvectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        if let Some(first) = col.iter().find(|c| c.abs() > f64::EPSILON) {
            if *first < 0.0 {
                col.iter_mut().for_each(|c| *c = -*c);
            }
        }
        for (i, c) in col.into_iter().enumerate() {
            eigenvectors[(i, dst)] = c;
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

fn off_diagonal_norm(w: &Matrix) -> f64 {
    let n = w.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += w[(i, j)] * w[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `w[p][q]`, accumulated into `v`.
fn rotate(w: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = w.rows;
    let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + theta.hypot(1.0))
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;

    for k in 0..n {
        let akp = w[(k, p)];
        let akq = w[(k, q)];
        w[(k, p)] = c * akp - s * akq;
        w[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = w[(p, k)];
        let aqk = w[(q, k)];
        w[(p, k)] = c * apk - s * aqk;
        w[(q, k)] = s * apk + c * aqk;
    }
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Checks that the columns of `m` are orthonormal within [`ORTHONORMAL_TOLERANCE`].
pub fn check_orthonormal_columns(m: &Matrix) -> Result<()> {
    let deviation = m.gram().identity_deviation();
    if deviation > ORTHONORMAL_TOLERANCE {
        return Err(LinalgError::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Extends `k` orthonormal columns in `R^m` with `m - k` further orthonormal
/// columns, returned as an `m × (m - k)` matrix.
///
/// Candidates are the standard basis vectors `e_1, …, e_m` in index order; each
/// is orthogonalized against everything accepted so far (two passes of modified
/// Gram-Schmidt) and skipped when the remainder is shorter than
/// [`COMPLETION_NORM_THRESHOLD`].
pub fn complete_orthonormal_basis(partial: &Matrix) -> Result<Matrix> {
    let m = partial.rows;
    let k = partial.cols;
    if k >= m {
        return Err(LinalgError::Completion(format!(
            "{k} columns already span R^{m}"
        )));
    }
    partial.check_finite()?;
    check_orthonormal_columns(partial)?;

    let mut basis: Vec<Vec<f64>> = partial.columns();
    let mut added: Vec<Vec<f64>> = Vec::with_capacity(m - k);
    for idx in 0..m {
        if added.len() == m - k {
            break;
        }
        let mut cand = vec![0.0; m];
        cand[idx] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&cand, b);
                cand.iter_mut().zip(b).for_each(|(c, bi)| *c -= proj * bi);
            }
        }
        let len = norm(&cand);
        if len < COMPLETION_NORM_THRESHOLD {
            continue;
        }
        cand.iter_mut().for_each(|c| *c /= len);
        basis.push(cand.clone());
        added.push(cand);
    }
    if added.len() != m - k {
        return Err(LinalgError::Completion(format!(
            "found only {} of {} complementary directions",
            added.len(),
            m - k
        )));
    }
    Matrix::from_columns(&added)
}

/// Self-normalized weighted mean and covariance:
/// `μ = Σ wᵢ xᵢ / Σ w`, `Σ = Σ wᵢ (xᵢ - μ)(xᵢ - μ)ᵀ / Σ w`.
pub fn weighted_mean_covariance(points: &[Vec<f64>], weights: &[f64]) -> Result<(Vec<f64>, Matrix)> {
    if points.len() < 2 {
        return Err(LinalgError::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    if weights.len() != points.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "{} weights for {} points",
            weights.len(),
            points.len()
        )));
    }
    let dim = points[0].len();
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(LinalgError::DimensionMismatch("points of differing length".into()));
        }
        if let Some(j) = p.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { row: i, col: j });
        }
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(LinalgError::InvalidWeight { index, value });
        }
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(LinalgError::DegenerateWeights);
    }
    let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let mut mean = vec![0.0; dim];
    for (p, &w) in points.iter().zip(&normalized) {
        mean.iter_mut().zip(p).for_each(|(m, x)| *m += w * x);
    }
    let mut cov = Matrix::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for (p, &w) in points.iter().zip(&normalized) {
        if w == 0.0 {
            continue;
        }
        centered
            .iter_mut()
            .zip(p.iter().zip(&mean))
            .for_each(|(c, (x, m))| *c = x - m);
        for a in 0..dim {
            for b in a..dim {
                cov[(a, b)] += w * centered[a] * centered[b];
            }
        }
    }
    for a in 0..dim {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    Ok((mean, cov))
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    lower: Matrix,
}

impl Cholesky {
    pub fn new(a: &Matrix) -> Result<Self> {
        Self::with_pivot_floor(a, 0.0)
    }

    /// Factorizes `a`, failing when a pivot drops to `floor` or below.
    pub fn with_pivot_floor(a: &Matrix, floor: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare {
                rows: a.rows,
                cols: a.cols,
            });
        }
        a.check_finite()?;
        let n = a.rows;
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor) {
                return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows
    }

    /// `log det A = 2 Σ log Lᵢᵢ`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.lower[(i, i)].ln()).sum::<f64>()
    }

    /// Solves `L u = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let l = &self.lower;
        let mut u = vec![0.0; n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[(i, k)] * u[k];
            }
            u[i] = s / l[(i, i)];
        }
        u
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let l = &self.lower;
        let u = self.solve_lower(b);
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = u[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        x
    }

    /// `L u`, mapping standard normal draws to draws with covariance `A`.
    pub fn mul_lower(&self, u: &[f64]) -> Vec<f64> {
        self.lower.mul_vec(u)
    }
}

/// Result of [`least_squares_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        dot(&self.coefficients, x) + self.intercept
    }
}

/// Ordinary least squares for `output ≈ coefficients · input + intercept`.
///
/// Inputs are centered and scaled per column before the normal equations are
/// solved by Cholesky; a pivot below `1e-12` times the largest diagonal entry is
/// reported as rank deficiency.
pub fn least_squares_fit(inputs: &[Vec<f64>], outputs: &[f64]) -> Result<LinearFit> {
    let n = inputs.len();
    let m = inputs.first().map_or(0, Vec::len);
    if outputs.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "{} outputs for {n} inputs",
            outputs.len()
        )));
    }
    if n < m + 1 || m == 0 {
        return Err(LinalgError::TooFewPoints {
            needed: m + 1,
            got: n,
        });
    }
    for (i, x) in inputs.iter().enumerate() {
        if x.len() != m {
            return Err(LinalgError::DimensionMismatch("inputs of differing length".into()));
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { row: i, col: j });
        }
    }
    if let Some(i) = outputs.iter().position(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite { row: i, col: m });
    }

    let nf = n as f64;
    let mut means = vec![0.0; m];
    for x in inputs {
        means.iter_mut().zip(x).for_each(|(mu, v)| *mu += v / nf);
    }
    let mut scales = vec![0.0; m];
    for x in inputs {
        scales
            .iter_mut()
            .zip(x.iter().zip(&means))
            .for_each(|(s, (v, mu))| *s += (v - mu) * (v - mu) / nf);
    }
    for (j, s) in scales.iter_mut().enumerate() {
        *s = s.sqrt();
        if !(*s > 0.0) {
            return Err(LinalgError::RankDeficient(format!(
                "input column {j} is constant"
            )));
        }
    }
    let y_mean = outputs.iter().sum::<f64>() / nf;

    let mut normal = Matrix::zeros(m, m);
    let mut rhs = vec![0.0; m];
    let mut z = vec![0.0; m];
    for (x, &y) in inputs.iter().zip(outputs) {
        for j in 0..m {
            z[j] = (x[j] - means[j]) / scales[j];
        }
        for a in 0..m {
            rhs[a] += z[a] * (y - y_mean);
            for b in a..m {
                normal[(a, b)] += z[a] * z[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            normal[(a, b)] = normal[(b, a)];
        }
    }
    let max_diag = (0..m).fold(0.0_f64, |acc, i| acc.max(normal[(i, i)]));
    let chol = Cholesky::with_pivot_floor(&normal, 1e-12 * max_diag).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { index, pivot } => LinalgError::RankDeficient(format!(
            "pivot {pivot:e} at standardized column {index}"
        )),
        other => other,
    })?;
    let beta = chol.solve(&rhs);
    let coefficients: Vec<f64> = beta.iter().zip(&scales).map(|(b, s)| b / s).collect();
    let intercept = y_mean - dot(&coefficients, &means);
    Ok(LinearFit {
        coefficients,
        intercept,
    })
}
