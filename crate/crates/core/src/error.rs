use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("duplicate edge ({user}, {item}); merge duplicates before building the graph")]
    DuplicateEdge { user: String, item: String },

    #[error("{side} '{id}' has non-positive weighted degree {degree}")]
    IsolatedNode {
        side: &'static str,
        id: String,
        degree: f64,
    },

    #[error("{algorithm}: non-finite score at iteration {iteration}")]
    NonFinite { algorithm: &'static str, iteration: usize },

    #[error("item '{0}' has no time window")]
    MissingWindow(String),

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("graph is empty")]
    EmptyGraph,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
