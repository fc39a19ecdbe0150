use std::path::PathBuf;

use hsco::dataio::DataError;
use hsco::model::ModelError;
use hsco::solver::SolveError;
use hsco::stationarity::StationarityError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stationarity(#[from] StationarityError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("solver failed: {0}")]
    Solver(String),
}

impl CliError {
    /// 1 for solver failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 1,
            _ => 2,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::DirectionFailure { .. } => CliError::Solver(e.to_string()),
            SolveError::Model(m) => CliError::Model(m),
            SolveError::Stationarity(s) => CliError::Stationarity(s),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
