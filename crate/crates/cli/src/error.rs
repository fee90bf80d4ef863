use std::fmt;

use qcrb_core::Error as CoreError;

/// Runner errors, mapped onto exit codes: configuration problems exit 2,
/// numeric-contract violations exit 3, I/O failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric { cell: String, message: String },
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(message) => write!(f, "configuration error: {message}"),
            CliError::Numeric { cell, message } => {
                write!(f, "numeric contract violated at {cell}: {message}")
            }
            CliError::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numeric { .. } => 3,
        }
    }

    /// Wraps a core error, attributing it to a named sweep cell. Errors that
    /// can only come from a bad configuration stay configuration errors.
    pub fn from_core(cell: &str, err: CoreError) -> CliError {
        match err {
            CoreError::InvalidParameter { .. }
            | CoreError::EmptyInput
            | CoreError::OddParticleNumber { .. }
            | CoreError::BadWeights { .. }
            | CoreError::DuplicateSector { .. }
            | CoreError::PdOnMultiSector { .. }
            | CoreError::SingleSectorRequired { .. }
            | CoreError::AsymmetricState
            | CoreError::UnsupportedLimit { .. }
            | CoreError::StateJson(_) => CliError::Config(format!("{cell}: {err}")),
            other => CliError::Numeric {
                cell: cell.to_string(),
                message: other.to_string(),
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
