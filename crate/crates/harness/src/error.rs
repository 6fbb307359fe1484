use std::path::PathBuf;

/// Failures are split by when they happen: anything wrong with the inputs is
/// reported before a run starts, everything else is a runtime failure.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Input { path: PathBuf, source: rdis_core::Error },
    #[error("{0}")]
    Problem(rdis_core::Error),
    #[error("run failed: {0}")]
    Runtime(rdis_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// Process exit status: 2 for configuration and input errors, 3 for
    /// failures during a run or while writing results.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input { .. } | Error::Problem(_) => 2,
            Error::Runtime(_) | Error::Io { .. } => 3,
        }
    }
}
