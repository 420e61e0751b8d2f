use thiserror::Error;

use crate::matrix::Kind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("kind mismatch: expected {expected:?}, found {found:?}")]
    KindMismatch { expected: Kind, found: Kind },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("matrix is not hermitian: {0}")]
    NotHermitian(String),

    #[error("observable window {window} exceeds dimension {n}")]
    WindowTooLarge { window: usize, n: usize },

    #[error("observable `{0}` is not strictly positive")]
    NonPositiveObservable(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl LabError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        LabError::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::Config { field: field.into(), reason: reason.into() }
    }
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
