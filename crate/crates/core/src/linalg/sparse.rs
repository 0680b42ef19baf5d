//! Compressed sparse row matrices, direct LU solves and a BiCGSTAB fallback.
//!
//! Assembly and the matrix-vector kernels are local; the LU factorization is
//! delegated to `faer`'s sparse LU (fill-reducing ordering, partial pivoting).

use crate::error::{Error, Result};
use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, MatMut};

/// Sparse matrix in compressed row form with unique, sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds the matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn assemble(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; n_rows + 1];
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::IndexOutOfRange(format!(
                    "entry ({r}, {c}) in a {n_rows} x {n_cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("matrix entry ({r}, {c})")));
            }
            counts[r + 1] += 1;
        }
        for r in 0..n_rows {
            counts[r + 1] += counts[r];
        }
        // Bucket by row, then sort and merge each row.
        let mut fill = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[fill[r]] = c;
            vals[fill[r]] = v;
            fill[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for r in 0..n_rows {
            row.clear();
            row.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            row.sort_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Iterator over stored `(row, col, value)` entries.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    /// `y = A^T x`.
    pub fn matvec_transpose(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_rows);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k] * xr;
            }
        }
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec(x, &mut y);
        y
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.values[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_cols];
        for (_, c, v) in self.entries() {
            s[c] += v;
        }
        s
    }

    pub fn transpose(&self) -> SparseMatrix {
        let t: Vec<_> = self.entries().map(|(r, c, v)| (c, r, v)).collect();
        SparseMatrix::assemble(self.n_cols, self.n_rows, &t).expect("transpose of a valid matrix")
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, c, v) in self.entries() {
            a[r][c] += v;
        }
        a
    }

    /// `rhs - A x`.
    pub fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        let ax = self.mul(x);
        rhs.iter().zip(ax).map(|(b, y)| b - y).collect()
    }
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    /// `||rhs - A x||_2` of the returned solution.
    pub residual_norm: f64,
    /// Refinement sweeps for the direct path, Krylov iterations otherwise.
    pub iterations: usize,
    pub method: SolveMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub tol: f64,
    pub method: SolveMethod,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            method: SolveMethod::Direct,
            max_iter: 5000,
        }
    }
}

/// Sparse LU factorization, reusable for many right-hand sides and for
/// transposed solves.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

impl SparseLu {
    pub fn new(m: &SparseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidDimension(format!(
                "LU needs a square matrix, got {} x {}",
                m.n_rows, m.n_cols
            )));
        }
        let trip: Vec<Triplet<usize, usize, f64>> = m.entries().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let csc = SparseColMat::<usize, f64>::try_new_from_triplets(m.n_rows, m.n_cols, &trip)
            .map_err(|e| Error::InvalidDimension(format!("sparse conversion: {e:?}")))?;
        let lu = csc
            .sp_lu()
            .map_err(|e| Error::Singular(format!("sparse LU breakdown: {e:?}")))?;
        Ok(Self { n: m.n_rows, lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn finish(x: &[f64]) -> Result<()> {
        if x.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Singular("zero pivot in sparse LU".into()))
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.n;
        self.lu
            .solve_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(x, n, 1));
        Self::finish(x)
    }

    /// Solves `A^T x = b` in place.
    pub fn solve_transpose_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.n;
        self.lu
            .solve_transpose_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(x, n, 1));
        Self::finish(x)
    }

    /// Solves for `k` right-hand sides stored column-major in `x` (length `n * k`).
    pub fn solve_many_in_place(&self, x: &mut [f64], k: usize) -> Result<()> {
        let n = self.n;
        debug_assert_eq!(x.len(), n * k);
        self.lu
            .solve_in_place_with_conj(Conj::No, MatMut::from_column_major_slice_mut(x, n, k));
        Self::finish(x)
    }
}

/// Direct solve with a few sweeps of iterative refinement against `m`.
pub fn solve_with_lu(m: &SparseMatrix, lu: &SparseLu, rhs: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let target = tol * norm2(rhs).max(1.0);
    let mut x = rhs.to_vec();
    lu.solve_in_place(&mut x)?;
    let mut r = m.residual(&x, rhs);
    let mut res = norm2(&r);
    let mut sweeps = 0;
    while res > target && sweeps < 3 {
        lu.solve_in_place(&mut r)?;
        x.iter_mut().zip(&r).for_each(|(xi, di)| *xi += di);
        r = m.residual(&x, rhs);
        res = norm2(&r);
        sweeps += 1;
    }
    if res > target {
        return Err(Error::NoConvergence {
            iterations: sweeps,
            residual: res,
        });
    }
    Ok((
        x,
        SolveStats {
            residual_norm: res,
            iterations: sweeps,
            method: SolveMethod::Direct,
        },
    ))
}

/// Solves `M x = rhs` to `||rhs - M x||_2 <= tol * max(1, ||rhs||_2)`.
pub fn solve_sparse(m: &SparseMatrix, rhs: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, SolveStats)> {
    if !m.is_square() {
        return Err(Error::InvalidDimension(format!(
            "solve needs a square matrix, got {} x {}",
            m.n_rows, m.n_cols
        )));
    }
    if rhs.len() != m.n_rows {
        return Err(Error::LengthMismatch {
            expected: m.n_rows,
            got: rhs.len(),
        });
    }
    match opts.method {
        SolveMethod::Direct => {
            let lu = SparseLu::new(m)?;
            solve_with_lu(m, &lu, rhs, opts.tol)
        }
        SolveMethod::Iterative => bicgstab(m, rhs, None, opts.tol, opts.max_iter),
    }
}

/// Jacobi-preconditioned BiCGSTAB.
pub fn bicgstab(
    m: &SparseMatrix,
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let n = m.n_rows;
    let target = tol * norm2(rhs).max(1.0);
    let inv_diag: Vec<f64> = (0..n)
        .map(|i| {
            let d = m.get(i, i);
            if d != 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv_diag).map(|(a, b)| a * b).collect() };

    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let mut r = m.residual(&x, rhs);
    let mut res = norm2(&r);
    if res <= target {
        return Ok((
            x,
            SolveStats {
                residual_norm: res,
                iterations: 0,
                method: SolveMethod::Iterative,
            },
        ));
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let p_hat = precond(&p);
        m.matvec(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            break;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) <= target {
            x.iter_mut().zip(&p_hat).for_each(|(xi, pi)| *xi += alpha * pi);
            res = norm2(&m.residual(&x, rhs));
            if res <= target {
                return Ok((
                    x,
                    SolveStats {
                        residual_norm: res,
                        iterations: it,
                        method: SolveMethod::Iterative,
                    },
                ));
            }
            r = m.residual(&x, rhs);
            continue;
        }
        let s_hat = precond(&s);
        m.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm2(&r);
        if res <= target {
            // Confirm against the true residual.
            res = norm2(&m.residual(&x, rhs));
            if res <= target {
                return Ok((
                    x,
                    SolveStats {
                        residual_norm: res,
                        iterations: it,
                        method: SolveMethod::Iterative,
                    },
                ));
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: res,
    })
}
