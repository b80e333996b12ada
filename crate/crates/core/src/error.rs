use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A coefficient or stepper produced a non-finite value.
    #[error("non-finite value at t = {t}, x = {x}")]
    Overflow { t: f64, x: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid usage: {0}")]
    Usage(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("reference simulation failed on path {path_index}: {reason}")]
    ReferenceFailed { path_index: u64, reason: String },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
