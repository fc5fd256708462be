use crate::bitcode::BitcodeError;
use crate::numeric::NumericError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A hyperparameter or argument violates its documented range.
    #[error("invalid configuration: `{field}` {reason}")]
    Config { field: &'static str, reason: String },
    /// A projection system was not positive definite.
    #[error("{source}; increase lambda1 or decrease lambda2")]
    Singular {
        #[source]
        source: NumericError,
    },
    #[error("invalid data: {0}")]
    Data(String),
    #[error(transparent)]
    Numeric(NumericError),
    #[error(transparent)]
    Bitcode(#[from] BitcodeError),
}

impl From<NumericError> for Error {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::NotPositiveDefinite { .. } => Error::Singular { source: e },
            other => Error::Numeric(other),
        }
    }
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by user-supplied settings rather than data or
    /// runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Singular { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
