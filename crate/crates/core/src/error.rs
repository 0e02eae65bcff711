//! Error type shared across the simulation and capacity machinery.

use thiserror::Error;

/// Errors produced by the reservoir simulator and capacity profiler.
#[derive(Debug, Error)]
pub enum Error {
    /// An input value violated a precondition (range, emptiness, ...).
    #[error("validation: {0}")]
    Validation(String),

    /// Operands have incompatible shapes.
    #[error("dimension mismatch in {context}: {details}")]
    Dimension {
        context: &'static str,
        details: String,
    },

    /// A requested size exceeds what the dense kernel supports.
    #[error("capacity: {0}")]
    Capacity(String),

    /// The operation is undefined for the given input.
    #[error("domain: {0}")]
    Domain(String),

    /// An iterative numerical routine failed to converge or produced
    /// values outside its guaranteed tolerance.
    #[error("numerical: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn dimension(context: &'static str, details: impl Into<String>) -> Self {
        Error::Dimension {
            context,
            details: details.into(),
        }
    }

    pub(crate) fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
