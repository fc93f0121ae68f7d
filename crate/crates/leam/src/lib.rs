//! LLM-driven antenna modeling: turns a description (and optional images)
//! into parameterized simulator macro files through four stages of tool
//! calls, each gated by parsers, linters and geometry checks from
//! [`leam_core`].
//!
//! - [`tools`]: the nine tools, their inputs and outputs, model routing.
//! - [`prompt`]: prompt assets and canonical request text.
//! - [`backend`]: replay from recorded transcripts, or a live HTTP endpoint.
//! - [`gate`]: output validation between stages.
//! - [`pipeline`]: the run itself and parameter updates.
//! - [`workspace`]: files on disk and the run manifest.
//! - [`report`]: volumes and check results of a finished model.

pub mod backend;
pub mod cli;
pub mod config;
mod error;
pub mod gate;
pub mod pipeline;
pub mod prompt;
pub mod report;
pub mod tools;
pub mod workspace;

pub use error::PipelineError;
pub use pipeline::{run_pipeline, run_update, Mode, PipelineConfig, PipelineState, UserInput};
pub use tools::{route_model, ArtifactKind, Models, Tool};
