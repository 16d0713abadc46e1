use std::fmt;

/// A configuration value that violates its contract.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Prefixes the field path, e.g. `aifsn` becomes `contenders[1].aifsn`.
    pub fn within(self, scope: &str) -> Self {
        Self {
            field: format!("{scope}.{}", self.field),
            reason: self.reason,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.reason)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("action index {index} out of range (cardinality {cardinality})")]
    ActionOutOfRange { index: usize, cardinality: usize },
    #[error("episode already finished; call reset first")]
    EpisodeDone,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("policy artifact: {0}")]
    Artifact(String),
    #[error("reports cannot be compared: {0}")]
    Compare(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
