use std::error::Error as StdError;
use std::path::PathBuf;

use afc_core::photonics::PhotonicsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// `path` is a JSON pointer into the config document.
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("parameter path `{0}` does not resolve in the config")]
    PathNotFound(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Wraps a module error with the stage it came from. An infeasible
    /// efficiency demand keeps its own category.
    pub fn stage<E: StdError + Send + Sync + 'static>(stage: &str, err: E) -> Self {
        if let Some(PhotonicsError::InfeasibleEfficiency { .. }) =
            (&err as &dyn StdError).downcast_ref::<PhotonicsError>()
        {
            return Self::Infeasible(format!("{stage}: {err}"));
        }
        Self::Stage {
            stage: stage.into(),
            source: Box::new(err),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 schema or usage, 3 stage or I/O failure,
    /// 4 infeasible request.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Schema { .. } | Self::PathNotFound(_) | Self::InvalidArgument(_) => 2,
            Self::Stage { .. } | Self::MissingArtifact(_) | Self::Io { .. } => 3,
            Self::Infeasible(_) => 4,
        }
    }
}
