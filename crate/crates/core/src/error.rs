use thiserror::Error;

/// Every failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("carrier {carrier:?} exceeds the grid Nyquist band {nyquist:?}{context}")]
    Nyquist {
        carrier: [i64; 3],
        nyquist: [usize; 3],
        context: String,
    },

    #[error("matrix outside the certified neighbourhood of Id: {0}")]
    Domain(String),

    #[error("energy band violated: {0}")]
    EnergyBand(String),

    #[error("validation failed for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("residual check failed: {0}")]
    Residual(String),

    #[error("strict-mode contract violated: {0}")]
    Contract(String),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
