//! Config-driven experiment runner: JSON configs in, CSV fields, diagnostics,
//! a manifest and a gnuplot script out.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse_batch, ExperimentConfig, Kind, ModelKind};
pub use output::Manifest;
pub use runner::{compute, run_experiment, run_file, Artifacts};
