//! Constant-coefficient cyclic bidiagonal systems.
//!
//! The matrix has `d` on the diagonal, `s` on the subdiagonal `(j, j-1)` and
//! `s` again in the top-right corner `(0, n-1)`. The corner unknown is carried
//! through the elimination as a bordered unknown, `x_j = p_j + q_j z`, so a
//! solve costs O(n). The `q_j` only depend on `(d, s, n)` and are factored once.
//!
//! When `d + s` is small against `d` (the IMEX matrix at small eps) the closure
//! `1 - (-s/d)^n` cancels; callers that know the row sum exactly pass it with
//! [`CyclicTridiag::with_row_sum`] so the closure keeps full relative accuracy.

use crate::error::{Error, Result};

/// Elimination pivots below this magnitude are treated as breakdown.
pub const PIVOT_TOL: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CyclicTridiag {
    pub n: usize,
    pub d: f64,
    pub s: f64,
    /// `d + s`, possibly known more accurately than its rounded sum.
    pub row_sum: f64,
}

impl CyclicTridiag {
    pub fn new(n: usize, d: f64, s: f64) -> Self {
        Self {
            n,
            d,
            s,
            row_sum: d + s,
        }
    }

    pub fn with_row_sum(n: usize, d: f64, s: f64, row_sum: f64) -> Self {
        Self { n, d, s, row_sum }
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|j| self.d * x[j] + self.s * x[(j + n - 1) % n]).collect()
    }

    /// Dense row-major copy, for oracles and condition numbers.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut a = vec![vec![0.0; n]; n];
        for (j, row) in a.iter_mut().enumerate() {
            row[j] += self.d;
            row[(j + n - 1) % n] += self.s;
        }
        a
    }

    /// Triplets `(row, col, value)` of the matrix.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n;
        let mut t = Vec::with_capacity(2 * n);
        for j in 0..n {
            t.push((j, j, self.d));
            t.push((j, (j + n - 1) % n, self.s));
        }
        t
    }

    pub fn factor(&self) -> Result<CyclicFactor> {
        CyclicFactor::new(*self)
    }
}

/// Direction of the elimination: forward in `j` when `|s| <= |d|`, backward otherwise,
/// so that the carried coefficients never grow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    Forward,
    Backward,
}

/// Precomputed elimination for one `CyclicTridiag`.
#[derive(Debug, Clone)]
pub struct CyclicFactor {
    m: CyclicTridiag,
    sweep: Sweep,
    inv_lead: f64,
    /// `-other / lead`, the decay ratio of the bordered coefficients.
    ratio: f64,
    /// `1 / (1 - ratio^n)`.
    inv_close: f64,
}

impl CyclicFactor {
    pub fn new(m: CyclicTridiag) -> Result<Self> {
        let CyclicTridiag { n, d, s, row_sum } = m;
        if n == 0 {
            return Err(Error::InvalidDimension("cyclic system of size 0".into()));
        }
        if !(d.is_finite() && s.is_finite() && row_sum.is_finite()) {
            return Err(Error::NonFinite("cyclic coefficients".into()));
        }
        let sweep = if s.abs() <= d.abs() {
            Sweep::Forward
        } else {
            Sweep::Backward
        };
        let (lead, other) = match sweep {
            Sweep::Forward => (d, s),
            Sweep::Backward => (s, d),
        };
        if lead.abs() < PIVOT_TOL {
            return Err(Error::Singular(format!("cyclic pivot {lead:e} (d = {d:e}, s = {s:e})")));
        }
        let ratio = -other / lead;
        // 1 - ratio^n; for 0 < ratio < 1 + small through 1 - ratio = row_sum / lead.
        let close = if ratio > 0.0 && row_sum / lead < 1.0 {
            -(n as f64 * (-row_sum / lead).ln_1p()).exp_m1()
        } else {
            1.0 - ratio.powi(n as i32)
        };
        let pivot = lead * close;
        if !(pivot.abs() >= PIVOT_TOL) {
            return Err(Error::Singular(format!(
                "cyclic closure pivot {pivot:e} (d = {d:e}, s = {s:e}, n = {n})"
            )));
        }
        Ok(Self {
            m,
            sweep,
            inv_lead: 1.0 / lead,
            ratio,
            inv_close: 1.0 / close,
        })
    }

    pub fn matrix(&self) -> CyclicTridiag {
        self.m
    }

    /// Solves `M x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.m.n;
        debug_assert_eq!(x.len(), n);
        let (inv, ratio) = (self.inv_lead, self.ratio);
        match self.sweep {
            Sweep::Forward => {
                // Row j: d x_j + s x_{j-1} = r_j, with x_{-1} = z := x_{n-1}.
                // x_j = p_j + ratio^(j+1) z; p overwrites x.
                x[0] *= inv;
                for j in 1..n {
                    x[j] = x[j] * inv + ratio * x[j - 1];
                }
                let z = x[n - 1] * self.inv_close;
                let mut q = ratio;
                for v in x[..n - 1].iter_mut() {
                    *v += q * z;
                    q *= ratio;
                }
                x[n - 1] = z;
            }
            Sweep::Backward => {
                // Row j solved for x_{j-1} = (r_j - d x_j)/s, with z := x_0
                // closing the cycle through row 0: x_{n-1} = (r_0 - d z)/s.
                // x_j = p_j + ratio^(n-j) z, swept from j = n-1 down to 0.
                let r0 = x[0] * inv;
                let mut next = r0;
                for j in (0..n - 1).rev() {
                    let p = x[j + 1] * inv + ratio * next;
                    x[j + 1] = next;
                    next = p;
                }
                // `next` is p_0, x[1..] hold p_1..p_{n-1}.
                let z = next * self.inv_close;
                let mut q = ratio;
                for v in x[1..].iter_mut().rev() {
                    *v += q * z;
                    q *= ratio;
                }
                x[0] = z;
            }
        }
    }
}

/// Solves `M x = rhs` for a cyclic system.
pub fn solve_cyclic(m: &CyclicTridiag, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.n {
        return Err(Error::LengthMismatch {
            expected: m.n,
            got: rhs.len(),
        });
    }
    let f = m.factor()?;
    let mut x = rhs.to_vec();
    f.solve_in_place(&mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_by_three_by_hand() {
        // [[2, 0, 1], [1, 2, 0], [0, 1, 2]] x = [3, 3, 3] has x = 1.
        let m = CyclicTridiag::new(3, 2.0, 1.0);
        let x = solve_cyclic(&m, &[3.0, 3.0, 3.0]).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-15), "{x:?}");
        // Backward sweep: |s| > |d|.
        let m = CyclicTridiag::new(3, 1.0, 2.0);
        let x = solve_cyclic(&m, &[3.0, 3.0, 3.0]).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-15), "{x:?}");
    }

    #[test]
    fn size_one_and_errors() {
        assert_eq!(
            solve_cyclic(&CyclicTridiag::new(1, 3.0, 1.0), &[8.0]).unwrap(),
            vec![2.0]
        );
        assert!(solve_cyclic(&CyclicTridiag::new(0, 1.0, 0.0), &[]).is_err());
        assert!(solve_cyclic(&CyclicTridiag::new(2, 1.0, 0.0), &[1.0]).is_err());
        assert!(CyclicTridiag::new(4, f64::NAN, 0.0).factor().is_err());
        // d = -s with even n: the constant vector is in the kernel.
        assert!(CyclicTridiag::new(4, 1.0, -1.0).factor().unwrap_err().is_singular());
    }

    #[test]
    fn exact_row_sum_keeps_the_mean_accurate() {
        // (eps + beta) x_j - beta x_{j-1} = eps has x = 1 for every eps > 0.
        let (n, beta) = (200, std::f64::consts::FRAC_1_PI);
        for eps in [1e-4, 1e-6, 1e-9] {
            let m = CyclicTridiag::with_row_sum(n, eps + beta, -beta, eps);
            let x = solve_cyclic(&m, &vec![eps; n]).unwrap();
            let err = x.iter().fold(0.0f64, |a, v| a.max((v - 1.0).abs()));
            assert!(err < 1e-13, "eps {eps:e}: {err:e}");
        }
    }

    proptest! {
        #[test]
        fn residual_is_small(n in 1usize..80, d in -4.0f64..4.0, s in -4.0f64..4.0, seed in 0u64..1000) {
            prop_assume!((d.abs() - s.abs()).abs() > 1e-2);
            let m = CyclicTridiag::new(n, d, s);
            let b: Vec<f64> = (0..n).map(|k| ((k as u64 * 7919 + seed) % 101) as f64 / 50.0 - 1.0).collect();
            let x = solve_cyclic(&m, &b).unwrap();
            let r = m.apply(&x);
            let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs())) * (d.abs() + s.abs());
            for (u, v) in r.iter().zip(&b) {
                prop_assert!((u - v).abs() <= 1e-12 * scale);
            }
        }
    }
}
