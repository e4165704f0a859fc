use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Everything that can stop a run before its gates are evaluated.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: io::Error },
    #[error("solver failure: {0}")]
    Solver(heatlab_core::Error),
    #[error("numerical error: {0}")]
    Numerics(heatlab_core::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
}

impl LabError {
    /// Process exit code: 2 for configuration problems, 3 for solver and output failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::ReadConfig { .. } => 2,
            LabError::Solver(_) | LabError::Numerics(_) | LabError::Write { .. } => 3,
        }
    }
}

impl From<heatlab_core::Error> for LabError {
    fn from(e: heatlab_core::Error) -> Self {
        use heatlab_core::Error as E;
        match e {
            E::PositivityLoss { .. } | E::SolverStalled { .. } => LabError::Solver(e),
            other => LabError::Numerics(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
