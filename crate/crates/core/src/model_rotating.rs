//! Rotating model `f_t + (y/eps) f_x - (x/eps) f_y = 0`.
//!
//! Characteristics are circles around the origin traversed with period
//! `2 pi eps`; the limit model keeps only circle averages of the initial data.

use crate::error::{Error, Result};
use crate::grid::{Field2D, Grid2D};
use crate::model_aligned::InitialCondition;
use std::f64::consts::PI;

pub const DEFAULT_N_QUAD: usize = 256;

#[derive(Debug, Clone)]
pub struct RotatingModel {
    pub eps: f64,
    pub ic: InitialCondition,
}

impl RotatingModel {
    pub fn new(eps: f64, ic: InitialCondition) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be finite and >= 0, got {eps}"
            )));
        }
        Ok(Self { eps, ic })
    }

    /// Centered Gaussian with `sigma = 0.5`.
    pub fn standard(eps: f64) -> Self {
        Self::new(eps, InitialCondition::gaussian(0.5)).expect("valid defaults")
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(eps, self.ic.clone())
    }
}

/// `(cos a x - sin a y, sin a x + cos a y)`.
#[inline]
pub fn rotate(x: f64, y: f64, angle: f64) -> (f64, f64) {
    let (s, c) = angle.sin_cos();
    (c * x - s * y, s * x + c * y)
}

/// `f_in(R(t/eps) (x, y))`, evaluating the initial data at the rotated point.
pub fn exact_rotating(m: &RotatingModel, t: f64, grid: Grid2D) -> Result<Field2D> {
    if m.eps == 0.0 {
        return Err(Error::InvalidParameter(
            "the exact solution needs eps > 0; use limit_rotating at eps = 0".into(),
        ));
    }
    let angle = (t / m.eps).rem_euclid(2.0 * PI);
    Field2D::sample(
        grid,
        |x, y| {
            let (xr, yr) = rotate(x, y, angle);
            m.ic.eval(xr, yr)
        },
        t,
    )
}

/// Limit solution: the average of `f_in` over the origin-centered circle through
/// each node, by `n_quad`-point quadrature of the analytic initial data.
pub fn limit_rotating(m: &RotatingModel, grid: Grid2D, n_quad: usize) -> Result<Field2D> {
    let n = n_quad.max(8);
    let angles: Vec<(f64, f64)> = (0..n).map(|k| (2.0 * PI * k as f64 / n as f64).sin_cos()).collect();
    Field2D::sample(
        grid,
        |x, y| {
            let r = x.hypot(y);
            angles.iter().map(|&(s, c)| m.ic.eval(r * c, r * s)).sum::<f64>() / n as f64
        },
        0.0,
    )
}

/// Bilinear interpolation of a field at `(x, y)` with periodic closure.
pub fn bilinear(f: &Field2D, x: f64, y: f64) -> f64 {
    let g = &f.grid;
    let u = (x - g.x_min) / g.dx;
    let v = (y - g.y_min) / g.dy;
    let (i0, j0) = (u.floor(), v.floor());
    let (tx, ty) = (u - i0, v - j0);
    let (i, j) = (i0 as isize, j0 as isize);
    let f00 = f.at(i, j);
    let f10 = f.at(i + 1, j);
    let f01 = f.at(i, j + 1);
    let f11 = f.at(i + 1, j + 1);
    (1.0 - tx) * ((1.0 - ty) * f00 + ty * f01) + tx * ((1.0 - ty) * f10 + ty * f11)
}

/// Mean of `f` over `n_quad` equispaced points of the origin-centered circle of
/// the given radius, with bilinear interpolation.
pub fn circle_average(f: &Field2D, radius: f64, n_quad: usize) -> Result<f64> {
    let g = &f.grid;
    if n_quad < 8 {
        return Err(Error::InvalidParameter(format!("n_quad must be >= 8, got {n_quad}")));
    }
    if !(radius >= 0.0) || -radius < g.x_min || radius > g.x_max || -radius < g.y_min || radius > g.y_max {
        return Err(Error::CircleOutOfDomain(radius));
    }
    let sum: f64 = (0..n_quad)
        .map(|k| {
            let (s, c) = (2.0 * PI * k as f64 / n_quad as f64).sin_cos();
            bilinear(f, radius * c, radius * s)
        })
        .sum();
    Ok(sum / n_quad as f64)
}
