//! Aligned model `f_t + a f_x + (b/eps) f_y = 0` on a doubly periodic box.

use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use std::fmt;
use std::sync::Arc;

/// Initial data library shared by both models.
#[derive(Clone)]
pub enum InitialCondition {
    /// `sin(x) (cos(2y) + 1)`.
    SinCos,
    /// `cos(2y) + 1`, the y-only profile of the one-dimensional runs.
    CosY,
    Constant(f64),
    /// `exp(-((x-x0)^2 + (y-y0)^2) / (2 sigma^2))`.
    Gaussian {
        sigma: f64,
        x0: f64,
        y0: f64,
    },
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl InitialCondition {
    pub fn gaussian(sigma: f64) -> Self {
        InitialCondition::Gaussian {
            sigma,
            x0: 0.0,
            y0: 0.0,
        }
    }

    pub fn custom(g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        InitialCondition::Custom(Arc::new(g))
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            InitialCondition::SinCos => x.sin() * ((2.0 * y).cos() + 1.0),
            InitialCondition::CosY => (2.0 * y).cos() + 1.0,
            InitialCondition::Constant(c) => *c,
            InitialCondition::Gaussian { sigma, x0, y0 } => {
                let r2 = (x - x0).powi(2) + (y - y0).powi(2);
                (-r2 / (2.0 * sigma * sigma)).exp()
            }
            InitialCondition::Custom(g) => g(x, y),
        }
    }

    pub fn sample(&self, grid: Grid2D) -> Result<Field2D> {
        Field2D::sample(grid, |x, y| self.eval(x, y), 0.0)
    }
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::SinCos => write!(f, "SinCos"),
            InitialCondition::CosY => write!(f, "CosY"),
            InitialCondition::Constant(c) => write!(f, "Constant({c})"),
            InitialCondition::Gaussian { sigma, x0, y0 } => {
                write!(f, "Gaussian {{ sigma: {sigma}, x0: {x0}, y0: {y0} }}")
            }
            InitialCondition::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlignedModel {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub ic: InitialCondition,
}

impl AlignedModel {
    /// `a = 0` is accepted for the one-dimensional runs; negative speeds are not.
    pub fn new(a: f64, b: f64, eps: f64, ic: InitialCondition) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidParameter(format!("a must be finite and >= 0, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::InvalidParameter(format!("b must be finite and > 0, got {b}")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be finite and >= 0, got {eps}"
            )));
        }
        Ok(Self { a, b, eps, ic })
    }

    /// `a = 0.1`, `b = 1` with the `sin(x)(cos(2y)+1)` initial data.
    pub fn standard(eps: f64) -> Self {
        Self::new(0.1, 1.0, eps, InitialCondition::SinCos).expect("valid defaults")
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.a, self.b, eps, self.ic.clone())
    }
}

/// Reduces `v` into `[lo, lo + len)`.
#[inline]
pub(crate) fn periodic(v: f64, lo: f64, len: f64) -> f64 {
    lo + (v - lo).rem_euclid(len)
}

/// `f_in(x - a t, y - (b/eps) t)` on the grid nodes.
pub fn exact_aligned(m: &AlignedModel, t: f64, grid: Grid2D) -> Result<Field2D> {
    if m.eps == 0.0 {
        return Err(Error::InvalidParameter(
            "the exact solution needs eps > 0; use limit_aligned at eps = 0".into(),
        ));
    }
    // Reduce the shifts modulo the periods before touching the coordinates:
    // b t / eps is huge for small eps.
    let sx = (m.a * t).rem_euclid(grid.lx());
    let sy = (m.b * t / m.eps).rem_euclid(grid.ly());
    let (lx, ly) = (grid.lx(), grid.ly());
    Field2D::sample(
        grid,
        |x, y| {
            m.ic.eval(periodic(x - sx, grid.x_min, lx), periodic(y - sy, grid.y_min, ly))
        },
        t,
    )
}

/// Mean over the independent y nodes for each x column.
pub fn y_average(f: &Field2D) -> Vec<f64> {
    let m = f.grid.my() as f64;
    (0..f.grid.mx()).map(|i| f.column(i).iter().sum::<f64>() / m).collect()
}

/// `fbar_in(x_i - a t)`, with `fbar_in` the discrete y-mean of the initial data.
pub fn limit_aligned(m: &AlignedModel, t: f64, grid: Grid2D) -> Vec<f64> {
    let sx = (m.a * t).rem_euclid(grid.lx());
    let my = grid.my();
    (0..grid.mx())
        .map(|i| {
            let x = periodic(grid.x(i) - sx, grid.x_min, grid.lx());
            (0..my).map(|j| m.ic.eval(x, grid.y(j))).sum::<f64>() / my as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid() -> Grid2D {
        Grid2D::periodic_2pi(201, 201).unwrap()
    }

    #[test]
    fn model_validation() {
        assert!(AlignedModel::new(0.0, 1.0, 1.0, InitialCondition::SinCos).is_ok());
        assert!(AlignedModel::new(-0.1, 1.0, 1.0, InitialCondition::SinCos).is_err());
        assert!(AlignedModel::new(0.1, 0.0, 1.0, InitialCondition::SinCos).is_err());
        assert!(AlignedModel::new(0.1, 1.0, -1.0, InitialCondition::SinCos).is_err());
    }

    #[test]
    fn exact_at_zero_is_initial_data() {
        let m = AlignedModel::standard(1.0);
        let e = exact_aligned(&m, 0.0, grid()).unwrap();
        let s = m.ic.sample(grid()).unwrap();
        assert_eq!(e.max_abs_diff(&s).unwrap(), 0.0);
    }

    #[test]
    fn exact_at_final_time() {
        let m = AlignedModel::standard(1.0);
        let g = grid();
        let e = exact_aligned(&m, 1.0, g).unwrap();
        let r = Field2D::sample(g, |x, y| (x - 0.1).sin() * ((2.0 * (y - 1.0)).cos() + 1.0), 1.0).unwrap();
        assert!(e.max_abs_diff(&r).unwrap() < 1e-13);
    }

    #[test]
    fn exact_half_period_in_y() {
        let eps = 0.5;
        let m = AlignedModel::standard(eps);
        let g = grid();
        let t = PI * eps;
        let e = exact_aligned(&m, t, g).unwrap();
        let r = Field2D::sample(g, |x, y| (x - 0.1 * t).sin() * ((2.0 * y).cos() + 1.0), t).unwrap();
        assert!(e.max_abs_diff(&r).unwrap() < 1e-13);
    }

    #[test]
    fn exact_rejects_eps_zero() {
        assert!(exact_aligned(&AlignedModel::standard(0.0), 1.0, grid()).is_err());
    }

    #[test]
    fn y_average_examples() {
        let g = grid();
        let c = Field2D::sample(g, |_, _| 3.5, 0.0).unwrap();
        assert!(y_average(&c).iter().all(|&v| (v - 3.5).abs() < 1e-14));
        let f = InitialCondition::SinCos.sample(g).unwrap();
        for (i, v) in y_average(&f).iter().enumerate() {
            assert!((v - g.x(i).sin()).abs() < 1e-12);
        }
        let cy = Field2D::sample(g, |_, y| (2.0 * y).cos(), 0.0).unwrap();
        assert!(y_average(&cy).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn limit_examples() {
        let g = grid();
        let m = AlignedModel::standard(0.0);
        let l0 = limit_aligned(&m, 0.0, g);
        let avg = y_average(&m.ic.sample(g).unwrap());
        for (a, b) in l0.iter().zip(&avg) {
            assert!((a - b).abs() < 1e-14);
        }
        let l1 = limit_aligned(&m, 1.0, g);
        for (i, v) in l1.iter().enumerate() {
            assert!((v - (g.x(i) - 0.1).sin()).abs() < 1e-12);
        }
        let m = AlignedModel::new(
            0.3,
            1.0,
            0.0,
            InitialCondition::custom(|x, _| x.cos() + 0.5 * (3.0 * x).sin()),
        )
        .unwrap();
        for (i, v) in limit_aligned(&m, 0.7, g).iter().enumerate() {
            let x = g.x(i) - 0.21;
            assert!((v - (x.cos() + 0.5 * (3.0 * x).sin())).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_eps_shift_is_reduced() {
        // b t / eps = 1e10: the reduced shift keeps the field bounded and periodic.
        let m = AlignedModel::standard(1e-10);
        let e = exact_aligned(&m, 1.0, grid()).unwrap();
        assert!(e.max_abs() <= 2.0 + 1e-12);
        let avg = y_average(&e);
        for (a, b) in avg.iter().zip(limit_aligned(&m, 1.0, grid())) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn average_of_exact_is_limit(t in 0.0f64..5.0, eps in 1e-6f64..2.0) {
            let g = Grid2D::periodic_2pi(41, 33).unwrap();
            let m = AlignedModel::standard(eps);
            let avg = y_average(&exact_aligned(&m, t, g).unwrap());
            let lim = limit_aligned(&m, t, g);
            for (a, b) in avg.iter().zip(&lim) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn exact_is_quasi_periodic(t in 0.0f64..3.0, eps in 1e-3f64..1.0) {
            let g = Grid2D::periodic_2pi(33, 33).unwrap();
            let m = AlignedModel::standard(eps);
            let period = g.ly() * eps / m.b;
            let later = exact_aligned(&m, t + period, g).unwrap();
            // Same y phase, x shifted by a * period.
            let shift = m.a * period;
            let sy = (m.b * t / eps).rem_euclid(g.ly());
            let expect = Field2D::sample(g, |x, y| m.ic.eval(x - m.a * t - shift, y - sy), t + period).unwrap();
            prop_assert!(later.max_abs_diff(&expect).unwrap() < 1e-9);
        }
    }
}
