use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scene config: {0}")]
    InvalidScene(String),

    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),

    #[error("pixel ({row}, {col}) is sky for some states of cell {cell:?} and ground for others")]
    MixedSkyGround {
        row: usize,
        col: usize,
        cell: (usize, usize),
    },

    #[error("invalid weight file: {0}")]
    InvalidWeights(String),

    #[error("input shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("grid oracle budget exceeded: {points} points > {budget}")]
    OracleBudget { points: u128, budget: u128 },

    #[error("tile {cell:?} failed: {source}")]
    Tile {
        cell: (usize, usize),
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error("malformed box file: {0}")]
    BoxFile(String),

    #[error("missing cell {0:?} in results")]
    MissingCell((usize, usize)),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    IoBare(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
