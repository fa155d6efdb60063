use gravfield::GravError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Compute(#[from] GravError),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io { context: context.into(), source }
    }

    /// 2 for bad input, 3 for a failed solve or evaluation, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Compute(e) => match e {
                GravError::InvalidArgument(_)
                | GravError::SizeMismatch { .. }
                | GravError::LevelMismatch(_)
                | GravError::OutsideTree { .. } => 2,
                GravError::Json(_) | GravError::Io(_) => 1,
                _ => 3,
            },
            Self::Io { .. } | Self::Json(_) => 1,
        }
    }
}
