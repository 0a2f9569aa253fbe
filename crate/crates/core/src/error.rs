use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("value error at row {row}, column `{column}`: `{value}` is not in the vocabulary")]
    Value {
        row: usize,
        column: String,
        value: String,
    },

    #[error("label error: {0}")]
    Label(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input files or arguments rather than
    /// by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numeric(_))
    }
}
