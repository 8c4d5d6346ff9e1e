use std::path::PathBuf;

use onhkit_core::Error as CoreError;

/// Process exit status for each error class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitClass {
    Usage = 1,
    Data = 2,
    Internal = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },
    #[error("{file}:{line}: {message}")]
    Parse { file: PathBuf, line: u64, message: String },
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn core(context: impl Into<String>, source: CoreError) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    pub fn class(&self) -> ExitClass {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => ExitClass::Usage,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Data(_) => ExitClass::Data,
            CliError::Core { source, .. } => match source {
                CoreError::InvalidConfig(_)
                | CoreError::DiscTooLarge { .. }
                | CoreError::TooManySuperpixels { .. }
                | CoreError::FreezeOutOfRange { .. } => ExitClass::Usage,
                CoreError::ShapeMismatch(_) | CoreError::ParamLength { .. } | CoreError::EmptyBatch => {
                    ExitClass::Internal
                }
                _ => ExitClass::Data,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
