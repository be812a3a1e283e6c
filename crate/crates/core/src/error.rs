use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration `{field}`: {message}")]
    Config { field: String, message: String },

    /// Caller-supplied data has the wrong shape or content.
    #[error("input error: {0}")]
    Input(String),

    /// A non-finite value appeared while evaluating a network layer.
    #[error("non-finite value in layer {layer}")]
    NonFiniteLayer { layer: usize },

    /// The loss of a specific instance evaluated to NaN or infinity.
    #[error("non-finite loss at instance {index}")]
    NonFiniteLoss { index: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    /// A data file could not be turned into a valid dataset.
    #[error("ingestion error at row {row}, column `{column}`: {message}")]
    Ingestion {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Error::Input(message.into())
    }

    /// True for errors caused by bad configuration rather than runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config { .. })
    }
}
