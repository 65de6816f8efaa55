use crw_core::jacobi::JacobiError;
use crw_core::simulate::SimError;
use crw_core::spectral::Assumption2Report;
use crw_core::{ConfigError, ModelError, SpectralError};
use thiserror::Error;

/// Process exit codes; a stable contract for scripts.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INVARIANT: u8 = 1;
    pub const VALIDATION: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const ASSUMPTION: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid model: {0}")]
    Validation(String),
    #[error("assumption on Spec(B) violated: {0}")]
    Assumption(Assumption2Report),
    #[error("numerical check failed: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => exit::PARSE,
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Assumption(_) => exit::ASSUMPTION,
            CliError::Numerical(_) => exit::INVARIANT,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(m) => m.into(),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<JacobiError> for CliError {
    fn from(e: JacobiError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::AssumptionViolated(r) => CliError::Assumption(r),
            SpectralError::Model(m) => m.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}
