//! Asymptotic-preserving time discretizations for two singularly perturbed
//! anisotropic transport models.
//!
//! The aligned model `f_t + a f_x + (b/eps) f_y = 0` is solved with four schemes
//! (IMEX, Fourier, Micro-Macro, Lagrange multiplier); the rotating model
//! `f_t + (y/eps) f_x - (x/eps) f_y = 0` with a fully implicit scheme and a
//! stabilized Lagrange-multiplier scheme. Exact and limit solutions, error
//! metrics, Von Neumann factors and condition-number studies sit next to the
//! schemes, and [`experiments`] drives config-based runs that write CSV data.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod linalg;
pub mod model_aligned;
pub mod model_rotating;
pub mod run;
pub mod schemes_aligned;
pub mod schemes_rotating;

pub use error::{Error, Result};
pub use grid::{wrap, Field2D, Grid2D};
