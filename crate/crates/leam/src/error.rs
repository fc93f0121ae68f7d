use std::io;
use std::path::PathBuf;

use leam_core::checks::CheckError;
use leam_core::geom::GeomError;
use thiserror::Error;

use crate::backend::BackendError;
use crate::gate::GateFailure;
use crate::tools::{ArtifactKind, Tool};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0} has not been produced yet")]
    MissingArtifact(ArtifactKind),
    #[error("{tool}: {source}")]
    Backend {
        tool: Tool,
        #[source]
        source: BackendError,
    },
    #[error(transparent)]
    Gate(#[from] GateFailure),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("workspace {}: {message}", path.display())]
    Workspace { path: PathBuf, message: String },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error("configuration: {0}")]
    Config(String),
}

impl PipelineError {
    /// Configuration and usage problems, as opposed to domain failures.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_)
                | PipelineError::Backend {
                    source: BackendError::FixtureDir { .. },
                    ..
                }
        )
    }
}
