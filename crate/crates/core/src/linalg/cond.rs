//! 2-norm condition numbers of sparse matrices.
//!
//! `sigma_max` comes from power iteration on `M^T M`; `sigma_min` from the same
//! iteration on `(M^T M)^{-1} = M^{-1} M^{-T}`, applied through one LU.

use super::sparse::{norm2, SparseLu, SparseMatrix};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
    pub iterations: usize,
}

impl CondEstimate {
    pub fn cond(&self) -> f64 {
        self.sigma_max / self.sigma_min
    }
}

/// Largest eigenvalue of a symmetric positive semi-definite operator given by `apply`.
/// Stops when the Rayleigh quotient changes by less than `tol` relative.
fn power_iteration(
    n: usize,
    max_iter: usize,
    tol: f64,
    seed: u64,
    mut apply: impl FnMut(&[f64], &mut [f64]) -> Result<()>,
) -> Result<(f64, usize)> {
    // A random start: constant vectors sit exactly on an eigenvector of the
    // circulant families and would hide the dominant direction.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        apply(&v, &mut w)?;
        let new = super::sparse::dot(&v, &w);
        let nw = norm2(&w);
        if !(nw.is_finite() && new.is_finite()) {
            return Err(Error::NonFinite("power iteration".into()));
        }
        if nw == 0.0 {
            return Ok((0.0, it));
        }
        change = (new - lambda).abs() / new.abs();
        lambda = new;
        v.iter_mut().zip(&w).for_each(|(a, b)| *a = b / nw);
        if change <= tol && it > 2 {
            return Ok((lambda, it));
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: change,
    })
}

/// Estimates `sigma_max`, `sigma_min` and their ratio.
pub fn cond2_estimate(m: &SparseMatrix, max_iter: usize, tol: f64) -> Result<CondEstimate> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "condition number needs a square matrix, got {} x {}",
            m.n_rows, m.n_cols
        )));
    }
    let n = m.n_rows;
    let mut tmp = vec![0.0; n];
    let (lmax, it1) = power_iteration(n, max_iter, tol, 0x5eed_0001, |v, w| {
        m.matvec(v, &mut tmp);
        m.matvec_transpose(&tmp, w);
        Ok(())
    })?;
    let lu = SparseLu::new(m)?;
    let (lmin_inv, it2) = power_iteration(n, max_iter, tol, 0x5eed_0002, |v, w| {
        w.copy_from_slice(v);
        lu.solve_transpose_in_place(w)?;
        lu.solve_in_place(w)
    })?;
    if lmin_inv <= 0.0 {
        return Err(Error::Singular("inverse iteration collapsed".into()));
    }
    Ok(CondEstimate {
        sigma_max: lmax.sqrt(),
        sigma_min: 1.0 / lmin_inv.sqrt(),
        iterations: it1 + it2,
    })
}

/// `||M||_2 ||M^{-1}||_2`.
pub fn cond2(m: &SparseMatrix, max_iter: usize, tol: f64) -> Result<f64> {
    cond2_estimate(m, max_iter, tol).map(|e| e.cond())
}
