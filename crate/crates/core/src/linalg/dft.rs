//! Direct discrete Fourier transform along y.
//!
//! Coefficients are ordered by wavenumber `k = -floor(m/2) ..= ceil(m/2) - 1`
//! and normalized so that coefficient 0 is the mean.

use num_complex::Complex64;

/// Lowest wavenumber stored for length `m`.
#[inline]
pub fn k_min(m: usize) -> i64 {
    -((m / 2) as i64)
}

/// Wavenumbers in storage order.
pub fn wavenumbers(m: usize) -> Vec<i64> {
    let k0 = k_min(m);
    (0..m as i64).map(|s| k0 + s).collect()
}

/// Storage position of wavenumber `k`.
#[inline]
pub fn slot(m: usize, k: i64) -> usize {
    (k - k_min(m)) as usize
}

/// Twiddle table `e^{-2 pi i r / m}` shared by forward and inverse transforms.
#[derive(Debug, Clone)]
pub struct DftPlan {
    m: usize,
    twiddle: Vec<Complex64>,
}

impl DftPlan {
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "transform length must be positive");
        let twiddle = (0..m)
            .map(|r| {
                let th = -2.0 * std::f64::consts::PI * r as f64 / m as f64;
                Complex64::new(th.cos(), th.sin())
            })
            .collect();
        Self { m, twiddle }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    #[inline]
    fn w(&self, k: i64, j: usize) -> Complex64 {
        let r = (k * j as i64).rem_euclid(self.m as i64) as usize;
        self.twiddle[r]
    }

    /// `out[slot(k)] = (1/m) sum_j v_j e^{-2 pi i k j / m}`.
    pub fn forward_real(&self, v: &[f64], out: &mut [Complex64]) {
        let m = self.m;
        let inv = 1.0 / m as f64;
        for (s, o) in out.iter_mut().enumerate().take(m) {
            let k = k_min(m) + s as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &vj) in v.iter().enumerate() {
                acc += self.w(k, j) * vj;
            }
            *o = acc * inv;
        }
    }

    pub fn forward(&self, v: &[Complex64], out: &mut [Complex64]) {
        let m = self.m;
        let inv = 1.0 / m as f64;
        for (s, o) in out.iter_mut().enumerate().take(m) {
            let k = k_min(m) + s as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &vj) in v.iter().enumerate() {
                acc += self.w(k, j) * vj;
            }
            *o = acc * inv;
        }
    }

    /// `out[j] = sum_k c_k e^{2 pi i k j / m}`.
    pub fn inverse(&self, c: &[Complex64], out: &mut [Complex64]) {
        let m = self.m;
        for (j, o) in out.iter_mut().enumerate().take(m) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (s, &cs) in c.iter().enumerate() {
                let k = k_min(m) + s as i64;
                acc += self.w(k, j).conj() * cs;
            }
            *o = acc;
        }
    }

    /// Real part of the inverse transform.
    pub fn inverse_real(&self, c: &[Complex64], out: &mut [f64]) {
        let m = self.m;
        for (j, o) in out.iter_mut().enumerate().take(m) {
            let mut acc = 0.0;
            for (s, &cs) in c.iter().enumerate() {
                let k = k_min(m) + s as i64;
                let w = self.w(k, j);
                // Re(conj(w) * c)
                acc += w.re * cs.re + w.im * cs.im;
            }
            *o = acc;
        }
    }
}

pub fn dft_y(values: &[f64]) -> Vec<Complex64> {
    let plan = DftPlan::new(values.len());
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    plan.forward_real(values, &mut out);
    out
}

pub fn idft_y(coeffs: &[Complex64]) -> Vec<Complex64> {
    let plan = DftPlan::new(coeffs.len());
    let mut out = vec![Complex64::new(0.0, 0.0); coeffs.len()];
    plan.inverse(coeffs, &mut out);
    out
}
