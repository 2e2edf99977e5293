use thiserror::Error;

use crate::lattice::SubsetIndex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice over {p} nodes exceeds the supported maximum of {max}")]
    DimensionTooLarge { p: usize, max: usize },

    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value at subset {0}")]
    NonFinite(SubsetIndex),

    #[error("probability at subset {subset} is {value}, must lie in (0, 1)")]
    Positivity { subset: SubsetIndex, value: f64 },

    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("log-potential {value} at subset {subset} overflows exp()")]
    Overflow { subset: SubsetIndex, value: f64 },

    #[error("zero empirical frequency with no smoothing at {} subsets (first: {}); more samples or alpha > 0 needed", .subsets.len(), .subsets[0])]
    ZeroFrequency { subsets: Vec<SubsetIndex> },

    #[error("solver did not converge after {iterations} iterations (objective {objective}, last decrease {gap:e})")]
    NonConvergence {
        iterations: usize,
        objective: f64,
        gap: f64,
        last_iterate: Vec<f64>,
    },

    #[error("response of node {node} is constant, logistic fit is undefined")]
    DegenerateResponse { node: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::ZeroFrequency { .. }
                | Error::NonConvergence { .. }
                | Error::DegenerateResponse { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_)) || matches!(self, Error::Csv(e) if e.is_io_error())
    }
}
