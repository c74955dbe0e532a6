use std::io;
use std::path::PathBuf;

use permqkd::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    /// Argument parsing failed or asked for help; already reported.
    #[error("argument parsing finished with code {0}")]
    Clap(i32),

    #[error("--seed is required when CI is set")]
    MissingSeed,

    #[error("invalid protocol configuration: {0}")]
    ProtocolConfig(CoreError),

    #[error("invalid delay bank: {0}")]
    DelayBank(CoreError),

    #[error("invalid parameter: {0}")]
    Parameter(CoreError),

    #[error("cannot read config file {path}: {source}")]
    ConfigFile { path: PathBuf, source: io::Error },

    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },

    #[error("protocol aborted but --expect-accept was given: {0}")]
    UnexpectedAbort(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::MissingSeed | Self::Parameter(_) | Self::ConfigFile { .. } => 2,
            Self::ProtocolConfig(_) => 3,
            Self::DelayBank(_) => 4,
            Self::Output { .. } => 5,
            Self::UnexpectedAbort(_) => 6,
            Self::Clap(code) => *code,
        }
    }

    pub fn output(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Output {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidBatchSize(_)
            | CoreError::NoRounds
            | CoreError::TooManyRounds { .. }
            | CoreError::PermutationsExhausted(_) => Self::ProtocolConfig(e),
            CoreError::DelayBankTooSmall { .. } => Self::DelayBank(e),
            other => Self::Parameter(other),
        }
    }
}
