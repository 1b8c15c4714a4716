use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid geometry mismatch: {0}")]
    Geometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    #[error("step size underflow at t = {t:e} (tau = {tau:e}); right-hand side is too stiff")]
    Stiffness { t: f64, tau: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing required field `{0}`")]
    MissingField(String),

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("unknown scenario `{name}`; valid names: {}", valid.join(", "))]
    UnknownScenario { name: String, valid: Vec<String> },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
