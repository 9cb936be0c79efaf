use std::path::PathBuf;

use thiserror::Error;
use wristband_core::Error as CoreError;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error("{0}")]
    Usage(String),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const PARSE: i32 = 4;
    pub const DATA: i32 = 5;
    pub const NUMERIC: i32 = 6;
    pub const MODEL: i32 = 7;
}

impl CliError {
    pub fn core(context: impl Into<String>, source: CoreError) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => exit::OTHER,
            CliError::Config { .. } => exit::CONFIG,
            CliError::Usage(_) => exit::USAGE,
            CliError::Core { source, .. } => match source {
                CoreError::InvalidConfig(_) => exit::CONFIG,
                CoreError::Parse { .. }
                | CoreError::Ordering { .. }
                | CoreError::LateFrame { .. }
                | CoreError::VoltageOutOfRange { .. } => exit::PARSE,
                CoreError::InsufficientData { .. }
                | CoreError::NoEstimates
                | CoreError::NoOverlap
                | CoreError::ConstantTruth => exit::DATA,
                CoreError::IllConditioned { .. }
                | CoreError::Conditioning(_)
                | CoreError::NonFinite(_)
                | CoreError::NegativeResistance(_)
                | CoreError::StrainOutOfRange { .. } => exit::NUMERIC,
                CoreError::ModelMismatch { .. }
                | CoreError::DimensionMismatch { .. }
                | CoreError::Decode(_)
                | CoreError::UnsupportedVersion { .. } => exit::MODEL,
                CoreError::Io(_) => exit::OTHER,
            },
        }
    }
}
