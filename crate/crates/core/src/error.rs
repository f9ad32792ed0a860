use thiserror::Error;

/// Errors produced by the estimators and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter `{field}`: {message}")]
    Parameter { field: &'static str, message: String },

    /// Experiment configuration is inconsistent (file, flags, or derived).
    #[error("configuration error: {0}")]
    Config(String),

    /// Input data is malformed (dimension mismatch, non-finite entries,
    /// unparseable CSV).
    #[error("data error: {0}")]
    Data(String),

    /// An operation was called in the wrong phase of a stateful object.
    #[error("state error: {0}")]
    State(String),

    /// The penalty lambda is too small to keep the dual variable positive
    /// definite. `min_lambda` is the smallest admissible value.
    #[error("penalty error: lambda must exceed {min_lambda}")]
    Penalty { min_lambda: f64 },

    /// A factorization or eigendecomposition failed.
    #[error("numerical error: {message} (lambda_min estimate: {lambda_min})")]
    Numerical { message: String, lambda_min: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parameter(field: &'static str, message: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>, lambda_min: f64) -> Self {
        Error::Numerical {
            message: message.into(),
            lambda_min,
        }
    }

    /// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter { .. } | Error::Config(_) | Error::State(_) | Error::Penalty { .. } => 2,
            Error::Data(_) | Error::Io(_) => 3,
            Error::Numerical { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
