use std::path::Path;

use convbeam_core::Error as CoreError;

/// Exit code for malformed input, unreadable files and invalid arguments.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for inputs that are individually valid but inconsistent.
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    /// Prefixes the message, keeping the category.
    pub fn context(self, what: impl std::fmt::Display) -> Self {
        match self {
            CliError::Input(m) => CliError::Input(format!("{what}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{what}: {m}")),
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Shape(_)
            | CoreError::InvalidReference
            | CoreError::Numerical(_)
            | CoreError::DegenerateSteering(_)
            | CoreError::NotPositiveDefinite { .. } => CliError::Data(err.to_string()),
            CoreError::InvalidInput(_)
            | CoreError::InvalidConfig(_)
            | CoreError::Format(_)
            | CoreError::Io(_) => CliError::Input(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
