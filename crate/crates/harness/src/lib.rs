//! Sweeps, scaling fits and reports on top of `fvk-core`.
//!
//! A sweep is described by a [`SweepConfig`] (usually read from TOML), runs
//! one independent solve per parameter tuple on a worker pool and produces
//! one [`Row`] per tuple in config order. [`fit_scaling`] regresses a table
//! against one of the [`Model`]s and [`write_report`] emits a plain-text
//! summary next to the table.

mod config;
mod error;
mod fit;
mod report;
mod sweep;

pub use config::{Experiment, OptimOverrides, SweepConfig};
pub use error::HarnessError;
pub use fit::{fit_scaling, Coefficient, Model, ScalingFit};
pub use report::{default_fits, read_table, summary, write_report, LabeledFit};
pub use sweep::{run_sweep, sidecar_path, Point, Row, SweepResult, CSV_COLUMNS};
