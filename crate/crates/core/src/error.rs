use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("assembly failed on triangle {triangle}: {message}")]
    Assembly { triangle: usize, message: String },

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("eigensolver failed: {message} (max residual {max_residual:e})")]
    Spectral { message: String, max_residual: f64 },

    #[error("problem too large: {0}")]
    Size(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
