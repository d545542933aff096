//! Library side of the `cope` command-line tool: experiment configuration,
//! reproduction presets, dataset loading, result emission, and the
//! subcommand implementations.

pub mod commands;
pub mod config;
pub mod data;
pub mod presets;
pub mod report;

/// Process exit contract: 0 success, 1 run failure, 2 bad configuration,
/// 3 missing dataset.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn dataset(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn run(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<cope_core::Error> for CliError {
    fn from(e: cope_core::Error) -> Self {
        CliError::run(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
