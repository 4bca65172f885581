use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("missing artifact {}: run `decor {producer}` first", path.display())]
    MissingArtifact { path: PathBuf, producer: &'static str },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: decor::Error,
    },
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl ToString) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a human-readable context to core errors.
pub(crate) trait Context<T> {
    fn context(self, context: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for decor::Result<T> {
    fn context(self, context: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core {
            context: context(),
            source,
        })
    }
}
