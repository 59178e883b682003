use std::path::PathBuf;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid block model: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("edge probability {value} at {location} is outside [0, 1]")]
    ProbabilityOutOfRange { value: f64, location: String },

    #[error("event table produced an empty node set")]
    EmptyNodeSet,

    #[error("unknown layer label `{0}`")]
    UnknownLayer(String),

    #[error("need more than {needed} points to fit, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("embedding has already been rescaled")]
    AlreadyRescaled,

    #[error("SVD did not converge after {restarts} restarts (max residual {residual:e})")]
    Convergence { restarts: usize, residual: f64 },

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerical routines rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::RankDeficient(_) | Error::Singular(_)
        )
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
