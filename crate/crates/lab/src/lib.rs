//! Config-driven verification runs on top of `heatlab-core`.
//!
//! A run solves one heat flow, evaluates the requested suites of checks and
//! writes `trajectory_meta.json`, `diagnostics.csv`, `pathwise.csv`,
//! `paramscan.csv`, `summary.json` and optionally `snapshots.csv`.

pub mod calibrate;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::RunConfig;
pub use error::{LabError, Result};
pub use runner::{calibrate, run, scan, RunOptions, RunOutcome};
