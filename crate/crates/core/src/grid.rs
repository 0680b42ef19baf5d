//! Periodic rectangular grids and scalar fields sampled on them.
//!
//! A grid with `nx` nodes in x stores only the `nx - 1` independent unknowns:
//! node `nx` is an alias of node 1. Fields are laid out column by column
//! (fixed x index, contiguous in y), so the per-column solves of the aligned
//! schemes work on contiguous slices.

use crate::error::{Error, Result};

/// Periodic grid on `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Node count in x including the duplicated periodic endpoint.
    pub nx: usize,
    /// Node count in y including the duplicated periodic endpoint.
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2D {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidDimension(format!(
                "need nx >= 3 and ny >= 3, got nx = {nx}, ny = {ny}"
            )));
        }
        let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
        if !finite || x_max <= x_min || y_max <= y_min {
            return Err(Error::InvalidDimension(format!(
                "empty or non-finite domain [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
            dx: (x_max - x_min) / (nx - 1) as f64,
            dy: (y_max - y_min) / (ny - 1) as f64,
        })
    }

    /// The `[0, 2pi]^2` grid used for the aligned model.
    pub fn periodic_2pi(nx: usize, ny: usize) -> Result<Self> {
        let l = 2.0 * std::f64::consts::PI;
        Self::new(0.0, l, 0.0, l, nx, ny)
    }

    /// Number of independent unknowns in x.
    #[inline]
    pub fn mx(&self) -> usize {
        self.nx - 1
    }

    /// Number of independent unknowns in y.
    #[inline]
    pub fn my(&self) -> usize {
        self.ny - 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mx() * self.my()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lx(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn ly(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Coordinate of the zero-based x index `i` (node `i + 1` in one-based terms).
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.dy
    }

    /// Flat storage index of zero-based node `(i, j)`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.my() + j
    }

    /// Flat index of `(i, j)` after periodic reduction of signed zero-based indices.
    #[inline]
    pub fn idx_wrapped(&self, i: isize, j: isize) -> usize {
        let i = i.rem_euclid(self.mx() as isize) as usize;
        let j = j.rem_euclid(self.my() as isize) as usize;
        self.idx(i, j)
    }

    /// Same interior nodes and domain, compared exactly.
    pub fn same_as(&self, other: &Grid2D) -> bool {
        self == other
    }
}

/// One-based periodic index reduction: the value in `1..=n` congruent to `i` modulo `n`.
pub fn wrap(i: i64, n: i64) -> i64 {
    assert!(n >= 1, "wrap needs n >= 1");
    (i - 1).rem_euclid(n) + 1
}

/// Scalar samples on the independent nodes of a grid at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field2D {
    pub fn zeros(grid: Grid2D, time: f64) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            time,
        }
    }

    pub fn from_values(grid: Grid2D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values, time })
    }

    /// Samples `g(x_i, y_j)` on every independent node.
    pub fn sample(grid: Grid2D, g: impl Fn(f64, f64) -> f64, time: f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.mx() {
            let x = grid.x(i);
            for j in 0..grid.my() {
                let v = g(x, grid.y(j));
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("sample at ({x}, {})", grid.y(j))));
                }
                values.push(v);
            }
        }
        Ok(Self { grid, values, time })
    }

    /// Value at zero-based indices with periodic closure, so `at(mx, j) == at(0, j)`.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.values[self.grid.idx_wrapped(i, j)]
    }

    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        let m = self.grid.my();
        &self.values[i * m..(i + 1) * m]
    }

    #[inline]
    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        let m = self.grid.my();
        &mut self.values[i * m..(i + 1) * m]
    }

    /// Discrete mass `sum_{i,j} f_ij`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what.to_string()))
        }
    }

    /// `max |self - other|` over the independent nodes.
    pub fn max_abs_diff(&self, other: &Field2D) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Values on the full `nx x ny` node set, aliased endpoints included, as
    /// `(x, y, value)` in x-major order.
    pub fn full_nodes(&self) -> Vec<(f64, f64, f64)> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(g.nx * g.ny);
        for i in 0..g.nx {
            for j in 0..g.ny {
                out.push((g.x(i), g.y(j), self.at(i as isize, j as isize)));
            }
        }
        out
    }
}
