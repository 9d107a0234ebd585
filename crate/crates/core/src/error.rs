use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library.
///
/// The variants are grouped so the command-line front end can map them onto
/// distinct exit codes: I/O and data problems on one side, numerical
/// pathologies on the other.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("innovation variance {variance} is not positive at step {step}")]
    NonPositiveInnovation { step: usize, variance: f64 },

    #[error("state diverged (non-finite values) at step {step}")]
    Divergence { step: usize },

    #[error("singular covariance at step {step}")]
    SingularCovariance { step: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for failures that stem from the numerics rather than from the
    /// inputs supplied by the caller.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonPositiveInnovation { .. }
                | Error::Divergence { .. }
                | Error::SingularCovariance { .. }
                | Error::Numerical(_)
                | Error::RankDeficient(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
