//! Results of a time integration: snapshots, per-step diagnostics and errors.

use crate::analysis::ErrorPair;
use crate::error::{Error, Result};
use crate::grid::Field2D;

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub field: Field2D,
    /// Multiplier field for the Lagrange schemes.
    pub aux: Option<Field2D>,
}

/// Diagnostics recorded after each accepted step (step 0 is the initial state).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    /// Worst linear-solve residual of the step, 0 for explicit or spectral updates.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Default)]
pub struct RunResult {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Vec<StepRecord>,
    pub errors: Vec<ErrorPair>,
}

impl RunResult {
    pub fn final_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Largest `|mass_n - mass_0|` divided by `scale`.
    pub fn mass_drift(&self, scale: f64) -> f64 {
        let Some(first) = self.diagnostics.first() else {
            return 0.0;
        };
        self.diagnostics
            .iter()
            .fold(0.0f64, |m, r| m.max((r.mass - first.mass).abs()))
            / scale
    }
}

/// Maps requested snapshot times onto step indices. Times must be multiples of
/// `dt` in `[0, n_steps dt]`; they are returned sorted and deduplicated.
pub fn snapshot_steps(times: &[f64], dt: f64, n_steps: usize) -> Result<Vec<usize>> {
    let mut steps = Vec::with_capacity(times.len());
    for &t in times {
        let k = (t / dt).round();
        if !t.is_finite() || (t - k * dt).abs() > 1e-9 * dt.max(t.abs()) || k < 0.0 || k > n_steps as f64 {
            return Err(Error::InvalidParameter(format!(
                "snapshot time {t} is not a multiple of dt = {dt} within [0, {}]",
                n_steps as f64 * dt
            )));
        }
        steps.push(k as usize);
    }
    steps.sort_unstable();
    steps.dedup();
    Ok(steps)
}
