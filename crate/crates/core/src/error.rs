use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A profile was evaluated at a negative squared distance.
    #[error("profile argument must be nonnegative, got {0}")]
    Domain(f64),

    /// Every kernel weight vanished at `at`; the weighted mean is undefined.
    #[error("all kernel weights are zero at x = {at}")]
    DegenerateWeights { at: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sample set must contain at least one point")]
    EmptySamples,

    #[error("sample value {0} is not finite")]
    NonFiniteSample(f64),

    #[error("unknown kernel profile `{0}`")]
    UnknownKernel(String),

    #[error("trajectory has {len} steps, need at least {needed}")]
    TrajectoryTooShort { len: usize, needed: usize },

    #[error("check is inapplicable: {0}")]
    Inapplicable(&'static str),

    #[error("no mode estimates to prune")]
    EmptyEstimates,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
