//! Optional TOML configuration:
//!
//! ```toml
//! [models]
//! reasoning = "o1-2024-12-17"
//! base = "gpt-4o-2024-11-20"
//!
//! [live]
//! attempts = 3
//! initial_backoff_ms = 500
//! timeout_s = 300
//! ```

use std::path::Path;
use std::time::Duration;

use serde::Deserialize;

use crate::backend::LiveConfig;
use crate::tools::Models;
use crate::PipelineError;

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub models: Models,
    pub live: LiveSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveSection {
    pub attempts: u32,
    pub initial_backoff_ms: u64,
    pub timeout_s: u64,
}

impl Default for LiveSection {
    fn default() -> Self {
        let d = LiveConfig::default();
        LiveSection {
            attempts: d.attempts,
            initial_backoff_ms: d.initial_backoff.as_millis() as u64,
            timeout_s: d.timeout.as_secs(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Live settings from this file plus `LEAM_API_BASE` / `LEAM_API_KEY`.
    pub fn live_config(&self) -> LiveConfig {
        LiveConfig {
            attempts: self.live.attempts,
            initial_backoff: Duration::from_millis(self.live.initial_backoff_ms),
            timeout: Duration::from_secs(self.live.timeout_s),
            ..LiveConfig::from_env()
        }
    }
}
