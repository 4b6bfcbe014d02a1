use std::io;

use thiserror::Error;

/// Failure categories with distinct exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Parse(String),
    #[error("invalid config:\n{0}")]
    Invalid(String),
    #[error("physics error in {context}: {source}")]
    Physics {
        context: String,
        #[source]
        source: ringrad::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Parse(_) | Self::Invalid(_) => 2,
            Self::Physics { .. } => 3,
            Self::Io { .. } => 4,
        }
    }

    pub fn physics(context: impl Into<String>) -> impl FnOnce(ringrad::Error) -> Self {
        let context = context.into();
        move |source| Self::Physics { context, source }
    }

    pub fn io(path: &std::path::Path) -> impl FnOnce(io::Error) -> Self + '_ {
        move |source| Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
