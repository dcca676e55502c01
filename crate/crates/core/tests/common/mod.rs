#![allow(dead_code)]

use easmh::linalg::{symmetric_eigendecompose, Matrix};
use easmh::StreamKey;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Intercept followed by slopes, from the raw normal equations of `[1 | X]`.
pub fn normal_equations_fit(inputs: &[Vec<f64>], outputs: &[f64]) -> Vec<f64> {
    let p = inputs[0].len() + 1;
    let mut ata = vec![vec![0.0; p]; p];
    let mut atb = vec![0.0; p];
    for (x, y) in inputs.iter().zip(outputs) {
        let row: Vec<f64> = std::iter::once(1.0).chain(x.iter().copied()).collect();
        for i in 0..p {
            atb[i] += row[i] * y;
            for j in 0..p {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    solve(ata, atb)
}

pub fn symmetric_from_triangle(n: usize, entries: &[f64]) -> Matrix {
    let mut a = Matrix::zeros(n, n);
    let mut it = entries.iter();
    for i in 0..n {
        for j in 0..=i {
            let v = *it.next().unwrap();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

pub fn random_orthogonal(n: usize, seed: u64) -> Matrix {
    let mut rng = StreamKey::root(seed).rng();
    let entries: Vec<f64> = (0..n * (n + 1) / 2).map(|_| rng.random_range(-1.0..1.0)).collect();
    symmetric_eigendecompose(&symmetric_from_triangle(n, &entries)).unwrap().eigenvectors
}

pub fn normal_draws(n: usize, stream: StreamKey) -> Vec<f64> {
    let mut rng = stream.rng();
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
