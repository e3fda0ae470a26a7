use std::path::PathBuf;

/// Failures of the file-based front end. Input problems map to exit code 3,
/// solver non-convergence to 2, everything else to 1.
#[derive(Debug, thiserror::Error)]
pub enum EvwError {
    #[error("{}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: line {line}, column {column}: {message}", path.display())]
    Json {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Invalid {
        path: PathBuf,
        #[source]
        source: evw_core::Error,
    },
    #[error("{}: row {row}: {message}", path.display())]
    Csv { path: PathBuf, row: u64, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] evw_core::Error),
}

impl EvwError {
    pub fn exit_code(&self) -> i32 {
        match self {
            EvwError::Read { .. }
            | EvwError::Json { .. }
            | EvwError::Invalid { .. }
            | EvwError::Csv { .. }
            | EvwError::Usage(_) => 3,
            EvwError::Core(e) if e.is_not_converged() => 2,
            EvwError::Core(evw_core::Error::Invalid { .. }) => 3,
            EvwError::Core(_) | EvwError::Write { .. } => 1,
        }
    }
}

pub type Result<T, E = EvwError> = std::result::Result<T, E>;
