use std::path::PathBuf;

use crate::config::Diagnostic;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("configuration has {} error(s)", .0.iter().filter(|d| d.is_error()).count())]
    Validation(Vec<Diagnostic>),
    #[error("capacity: {0}")]
    Capacity(cvqec_core::Error),
    #[error("runtime: {0}")]
    Runtime(cvqec_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Runtime(_) | CliError::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<cvqec_core::Error> for CliError {
    fn from(e: cvqec_core::Error) -> Self {
        match e {
            cvqec_core::Error::CapacityExceeded { .. } => CliError::Capacity(e),
            other => CliError::Runtime(other),
        }
    }
}
