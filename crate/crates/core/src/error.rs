use crate::env::CartpoleState;

/// Errors produced by configuration validation and batch operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {what}: {message}")]
    InvalidArgument {
        what: &'static str,
        message: String,
    },
    #[error("non-finite cart-pole state: {0:?}")]
    NonFiniteState(CartpoleState),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("probability vector at index {index} sums to {sum}, expected 1")]
    NotNormalized { index: usize, sum: f64 },
    #[error("component {index} of action {value} outside [{low}, {high}]")]
    ActionOutOfBounds {
        index: usize,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            what,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
