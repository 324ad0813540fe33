use thiserror::Error;

/// Errors raised across the library.
///
/// Configuration problems carry the offending field name and the violated
/// constraint so front ends can report them verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {constraint}")]
    Parameter { field: &'static str, constraint: String },

    #[error("invalid configuration `{field}`: {constraint}")]
    Config { field: &'static str, constraint: String },

    #[error("invalid cache layout: {0}")]
    Layout(String),

    #[error("scheduling error: {0}")]
    Schedule(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(field: &'static str, constraint: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            constraint: constraint.into(),
        }
    }

    pub(crate) fn config(field: &'static str, constraint: impl Into<String>) -> Self {
        Error::Config {
            field,
            constraint: constraint.into(),
        }
    }
}
