use thiserror::Error;

/// Errors raised by the decoding toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("model format error in field `{field}`: {reason}")]
    Format { field: String, reason: String },

    #[error("unsupported model format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn undefined(msg: impl Into<String>) -> Self {
        Error::UndefinedMetric(msg.into())
    }

    pub(crate) fn format(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
