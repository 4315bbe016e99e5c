use possfuse_core::Error;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    /// Problem with a constraint, mass function, kernel or scenario.
    #[error("{0}")]
    Input(#[from] Error),
    /// Problem with a map file, including maps that are not total.
    #[error("map: {0}")]
    Map(Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse { .. } => 2,
            CliError::Map(_) => 3,
            CliError::CheckFailed(_) => 5,
            CliError::Input(e) => match e {
                Error::SpaceMismatch | Error::NotProduct | Error::InvalidMap(_) => 3,
                Error::IncompatibleConstraints { .. } => 4,
                _ => 2,
            },
        }
    }
}
