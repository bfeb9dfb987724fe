use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A special function was called outside its domain.
    #[error("{func}: argument out of domain ({detail})")]
    Domain { func: &'static str, detail: String },

    /// An iterative method ran out of budget before meeting its tolerance.
    #[error("{method} did not converge (achieved error estimate {achieved:e})")]
    NonConvergence { method: &'static str, achieved: f64 },

    /// A distribution parameter failed validation.
    #[error("{family}: {message}")]
    InvalidParameter { family: &'static str, message: String },

    /// A distribution specification string could not be parsed.
    #[error("cannot parse distribution spec: {0}")]
    Parse(String),

    /// The requested operation is not defined for this family.
    #[error("{operation} is not supported for {family}")]
    Unsupported { family: &'static str, operation: &'static str },

    /// Band variant not applicable to the family.
    #[error("band variant {variant} cannot be used with {family}")]
    IncompatibleVariant { family: &'static str, variant: &'static str },

    /// Any other invalid argument (grids, sample counts, figure ids).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain { func, detail: detail.into() }
}
