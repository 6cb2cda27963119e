use std::io;
use std::path::PathBuf;

use qam_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl RunError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        RunError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 configuration, 3 numerical, 4 fit, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(e) => match e {
                CoreError::InvalidParameter { .. } => 2,
                CoreError::BasisOverflow { .. }
                | CoreError::NoStableFixedPoint
                | CoreError::NoChaoticSeed
                | CoreError::WindowOutOfBasis { .. } => 3,
                CoreError::InsufficientData { .. }
                | CoreError::NonPositiveSurvival { .. }
                | CoreError::ModeNotSeparated => 4,
            },
            RunError::Io { .. } | RunError::Csv { .. } | RunError::Json { .. } => 1,
        }
    }
}
