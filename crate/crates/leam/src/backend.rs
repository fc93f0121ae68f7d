//! LLM backends: deterministic replay from recorded transcripts, and a live
//! OpenAI-compatible chat-completions client.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};
use thiserror::Error;

use crate::prompt::{sha256_hex, ImageInput, Prompt};
use crate::tools::Tool;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no fixture for invocation {index:02} ({tool}) with request sha256 {hash}")]
    FixtureMiss { index: usize, tool: Tool, hash: String },
    #[error("fixture directory {path}: {message}")]
    FixtureDir { path: PathBuf, message: String },
    #[error("request failed after {attempts} attempt(s): {last}")]
    Exhausted { attempts: u32, last: String },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed response: {0}")]
    Response(String),
}

/// Answers one tool invocation.
///
/// `index` is the 1-based invocation number within the run. Implementations
/// must be usable from two threads at once (stage 3 runs two tools
/// concurrently).
pub trait Backend: Sync {
    fn complete(&self, index: usize, prompt: &Prompt, images: &[ImageInput]) -> Result<String, BackendError>;

    /// When true, transcripts carry logical timestamps so runs are byte-identical.
    fn deterministic(&self) -> bool {
        false
    }
}

/// File stem of an invocation, `NN_<tool>`.
pub fn fixture_stem(index: usize, tool: Tool) -> String {
    format!("{index:02}_{tool}")
}

#[derive(Debug, Clone)]
struct Fixture {
    index: usize,
    tool: Tool,
    request_hash: String,
    response: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayMatch {
    /// By SHA-256 of the request text; any prompt change is a miss.
    Hash,
    /// By invocation number and tool only.
    Loose,
}

/// Serves responses from `NN_<tool>.request.txt` / `NN_<tool>.response.txt` pairs.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    fixtures: Vec<Fixture>,
    matching: ReplayMatch,
}

impl ReplayBackend {
    pub fn open(dir: &Path, matching: ReplayMatch) -> Result<Self, BackendError> {
        let dir_err = |message: String| BackendError::FixtureDir {
            path: dir.to_path_buf(),
            message,
        };
        let entries = fs::read_dir(dir).map_err(|e| dir_err(e.to_string()))?;
        let mut fixtures = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| dir_err(e.to_string()))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            let Some(stem) = name.strip_suffix(".request.txt") else {
                continue;
            };
            let parsed = stem
                .split_once('_')
                .and_then(|(n, t)| Some((n.parse::<usize>().ok()?, t.parse::<Tool>().ok()?)));
            let Some((index, tool)) = parsed else {
                return Err(dir_err(format!("unexpected fixture file `{name}`")));
            };
            let request = fs::read(entry.path()).map_err(|e| dir_err(e.to_string()))?;
            fixtures.push(Fixture {
                index,
                tool,
                request_hash: sha256_hex(&request),
                response: dir.join(format!("{stem}.response.txt")),
            });
        }
        fixtures.sort_by_key(|f| f.index);
        Ok(ReplayBackend { fixtures, matching })
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, index: usize, prompt: &Prompt, _images: &[ImageInput]) -> Result<String, BackendError> {
        let hash = prompt.hash();
        let found = self.fixtures.iter().find(|f| {
            f.tool == prompt.tool
                && match self.matching {
                    ReplayMatch::Hash => f.request_hash == hash,
                    ReplayMatch::Loose => f.index == index,
                }
        });
        let miss = || BackendError::FixtureMiss {
            index,
            tool: prompt.tool,
            hash: hash.clone(),
        };
        let f = found.ok_or_else(miss)?;
        fs::read_to_string(&f.response).map_err(|_| miss())
    }

    fn deterministic(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    /// Base URL up to and including the API version, e.g. `https://host/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    pub attempts: u32,
    /// Delay before the second attempt; doubles after each failure.
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key: None,
            attempts: 3,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(300),
        }
    }
}

impl LiveConfig {
    /// Defaults overridden by `LEAM_API_BASE` and `LEAM_API_KEY`.
    pub fn from_env() -> Self {
        let mut cfg = LiveConfig::default();
        if let Ok(base) = std::env::var("LEAM_API_BASE") {
            cfg.base_url = base;
        }
        cfg.api_key = std::env::var("LEAM_API_KEY").ok();
        cfg
    }
}

pub struct LiveBackend {
    cfg: LiveConfig,
    agent: ureq::Agent,
}

impl LiveBackend {
    pub fn new(cfg: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        LiveBackend { cfg, agent }
    }

    fn body(prompt: &Prompt, images: &[ImageInput]) -> Value {
        let mut content = vec![json!({ "type": "text", "text": prompt.user })];
        for r in &prompt.images {
            if let Some(img) = images.iter().find(|i| i.sha256() == r.sha256) {
                let data = base64::engine::general_purpose::STANDARD.encode(&img.bytes);
                content.push(json!({
                    "type": "image_url",
                    "image_url": { "url": format!("data:{};base64,{data}", img.mime()) }
                }));
            }
        }
        json!({
            "model": prompt.model,
            "messages": [
                { "role": "system", "content": prompt.system },
                { "role": "user", "content": content },
            ]
        })
    }

    /// One HTTP exchange. `Ok(Err(_))` is a retryable failure.
    fn attempt(&self, url: &str, body: &str) -> Result<Result<String, String>, BackendError> {
        let mut req = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send(body) {
            Ok(r) => r,
            Err(e) => return Ok(Err(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Ok(Err(e.to_string())),
        };
        if status == 429 || status >= 500 {
            return Ok(Err(format!("HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(BackendError::Http { status, body: text });
        }
        Ok(Ok(text))
    }
}

/// Extracts `choices[0].message.content` from a chat-completions reply.
pub fn response_content(reply: &str) -> Result<String, BackendError> {
    let v: Value = serde_json::from_str(reply).map_err(|e| BackendError::Response(e.to_string()))?;
    v["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| BackendError::Response("no choices[0].message.content".into()))
}

impl Backend for LiveBackend {
    fn complete(&self, _index: usize, prompt: &Prompt, images: &[ImageInput]) -> Result<String, BackendError> {
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        let body = Self::body(prompt, images).to_string();
        let attempts = self.cfg.attempts.max(1);
        let mut delay = self.cfg.initial_backoff;
        let mut last = String::new();
        for n in 1..=attempts {
            match self.attempt(&url, &body)? {
                Ok(text) => return response_content(&text),
                Err(e) => last = e,
            }
            if n < attempts {
                thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(BackendError::Exhausted { attempts, last })
    }
}
