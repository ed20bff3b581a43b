use std::path::PathBuf;

use thiserror::Error;
use towerfan_core::{
    baseline::BaselineError, esc::EscError, metrics::MetricsError, plant::PlantError, sysid::SysIdError, vpm::VpmError,
};

/// Anything that can stop the harness. Config problems map to exit code 2,
/// failures while simulating to 3.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Scenario { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Weather { path: PathBuf, line: u64, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("step {step}: {message}")]
    Step { step: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
    #[error("{path}:{row}: {message}")]
    Validation { path: PathBuf, row: u64, message: String },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Scenario { .. } | HarnessError::Weather { .. } | HarnessError::Argument(_) => 2,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_step(step: usize, err: impl Into<ModelError>) -> Self {
        HarnessError::Step {
            step,
            message: err.into().to_string(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Esc(#[from] EscError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Vpm(#[from] VpmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    SysId(#[from] SysIdError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
