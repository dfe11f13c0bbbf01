use std::io;
use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] pnsm_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Self::Format { path: path.into(), msg: msg.into() }
    }

    /// 2 usage, 3 numerical failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        use pnsm_core::Error as E;
        match self {
            Self::Usage(_) => 2,
            Self::Core(e) => match e {
                E::InvalidArgument(_)
                | E::InvalidDimension { .. }
                | E::InvalidCloud(_)
                | E::ShapeMismatch { .. }
                | E::LabelError(_)
                | E::AnglesUndefined => 2,
                _ => 3,
            },
            Self::Io { .. } | Self::Csv { .. } | Self::Format { .. } | Self::Json { .. } => 4,
        }
    }
}
