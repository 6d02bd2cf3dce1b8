use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("normal equations are singular at lambda = 0; use a ridge parameter > 0")]
    SingularSystem,

    #[error("degenerate variance: {0} is constant")]
    DegenerateVariance(&'static str),

    #[error("NARMA-{order} diverged for every seed in {first_seed}..={last_seed}")]
    TaskDivergence {
        order: usize,
        first_seed: u64,
        last_seed: u64,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("input series has {input_len} rows but target series has {target_len}")]
    LengthMismatch { input_len: usize, target_len: usize },

    #[error("spec error: {0}")]
    Spec(String),

    #[error("replication {index}: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("output: {0}")]
    Output(String),
}

impl Error {
    /// True for errors caused by a malformed or inconsistent experiment
    /// description rather than by a failure while running it.
    pub fn is_spec_error(&self) -> bool {
        match self {
            Error::Spec(_) | Error::InvalidParameter(_) => true,
            Error::Replication { source, .. } => source.is_spec_error(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
