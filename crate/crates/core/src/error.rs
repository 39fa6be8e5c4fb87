use thiserror::Error;

/// Errors raised by the pricing engines and their input validation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Bad user configuration; `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),

    /// The inputs are valid but outside the range where the closed forms are trustworthy.
    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    /// A computation produced a non-finite value or failed to converge.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by configuration rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation { .. } | Error::MissingParameter(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
