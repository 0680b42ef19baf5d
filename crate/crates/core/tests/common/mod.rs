//! Dense nalgebra oracles shared by the integration tests.
#![allow(dead_code)]

use aptransport::linalg::SparseMatrix;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn dense(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub fn lu_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    a.clone()
        .lu()
        .solve(&DVector::from_column_slice(b))
        .expect("oracle matrix is nonsingular")
        .iter()
        .copied()
        .collect()
}

pub fn svd_cond(a: &DMatrix<f64>) -> f64 {
    let s = a.clone().singular_values();
    s.max() / s.min()
}

/// `max |a - b| / max |b|`.
pub fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Random row-diagonally-dominant sparse matrix with a random diagonal sign.
pub fn random_dominant(n: usize, rng: &mut ChaCha8Rng, density: f64) -> SparseMatrix {
    let mut t = Vec::new();
    for r in 0..n {
        let mut off = 0.0;
        for c in 0..n {
            if c != r && rng.random::<f64>() < density {
                let v = rng.random_range(-1.0..1.0);
                off += f64::abs(v);
                t.push((r, c, v));
            }
        }
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        t.push((r, r, sign * (off + rng.random_range(0.5..2.0))));
    }
    SparseMatrix::assemble(n, n, &t).unwrap()
}

/// Random sparse matrix with a shifted diagonal; not necessarily dominant.
pub fn random_shifted(n: usize, rng: &mut ChaCha8Rng) -> SparseMatrix {
    let mut t = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if rng.random::<f64>() < 0.15 || r == c {
                t.push((r, c, rng.random_range(-1.0..1.0) + if r == c { 2.0 } else { 0.0 }));
            }
        }
    }
    SparseMatrix::assemble(n, n, &t).unwrap()
}
