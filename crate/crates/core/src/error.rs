use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("could not place obstacle {index} after {attempts} attempts (scene too crowded)")]
    Placement { index: usize, attempts: usize },

    #[error("grid of {cells} cells exceeds the budget of {budget}")]
    CellBudget { cells: usize, budget: usize },

    #[error("point ({x:.3}, {y:.3}) lies outside the map")]
    OutOfBounds { x: f64, y: f64 },

    #[error("goal is unreachable")]
    Unreachable,

    #[error("no valid endpoint pair after {0} attempts")]
    NoEndpoints(usize),

    #[error("trajectory too short: need {needed:.3} m, have {available:.3} m")]
    TooShort { needed: f64, available: f64 },

    #[error("need at least two distinct waypoints")]
    Degenerate,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    Empty,

    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error("schema version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("planning failed after {0} attempts")]
    PlanningFailed(usize),

    #[error("policy failed to start: {0}")]
    PolicyStartup(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
