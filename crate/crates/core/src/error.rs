use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Every residual of some coordinate fell outside the Huber band, so the
    /// mean of `psi'` vanishes.
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("singular covariance: {0}")]
    SingularCovariance(String),
    #[error("degenerate bootstrap: {discarded} of {requested} replicates discarded")]
    DegenerateBootstrap { discarded: usize, requested: usize },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by the data rather than by the caller.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateDesign(_)
                | Error::SingularCovariance(_)
                | Error::DegenerateBootstrap { .. }
                | Error::Internal(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
