use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ugdp_core::Error),

    /// Artifacts on disk were produced under a different configuration.
    #[error("provenance error: {0}")]
    Provenance(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Provenance(_) => 3,
            CliError::Core(ugdp_core::Error::Numeric(_)) => 4,
            CliError::Core(_) => 2,
        }
    }
}
