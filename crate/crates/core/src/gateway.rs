//! Chat-completion client for OpenAI-compatible endpoints, plus replay and
//! recording transports for offline, deterministic runs.
//!
//! The API key is wrapped in [`ApiKey`], whose `Debug` output is redacted
//! and which has no `Display` or `Serialize`. Every message built from
//! server output passes through [`redact`] before it reaches an error.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::document::{parse_json, serialize_json, DataNode, Map, Number};

pub const API_KEY_ENV: &str = "SCHEMAFORGE_API_KEY";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";

const REDACTED: &str = "[redacted]";
const BODY_EXCERPT: usize = 300;

/// Secret credential. Never printed.
#[derive(Clone, PartialEq, Eq)]
pub struct ApiKey(String);

impl ApiKey {
    pub fn new(key: impl Into<String>) -> Self {
        ApiKey(key.into())
    }

    /// Reads [`API_KEY_ENV`]; blank values count as unset.
    pub fn from_env() -> Option<Self> {
        std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .map(|k| ApiKey(k.trim().to_string()))
    }

    pub(crate) fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ApiKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ApiKey([redacted])")
    }
}

/// Replaces every occurrence of the key in `text`.
pub fn redact(text: &str, key: Option<&ApiKey>) -> String {
    match key {
        Some(k) if !k.0.is_empty() => text.replace(&k.0, REDACTED),
        _ => text.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }
}

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<ApiKey>,
    pub timeout: Duration,
    pub max_retries: u32,
    pub temperature: Number,
    /// First retry delay; doubles on every further attempt.
    pub retry_backoff: Duration,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            base_url: DEFAULT_BASE_URL.into(),
            model: DEFAULT_MODEL.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            max_retries: 3,
            temperature: Number::zero(),
            retry_backoff: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("message list is empty")]
    EmptyMessages,
    #[error("message {index} has empty content")]
    EmptyContent { index: usize },
    #[error("no API key configured; set {API_KEY_ENV} or add api_key to the config file")]
    MissingApiKey,
    #[error("endpoint rejected the credentials (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited by the endpoint (HTTP 429) after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("request timed out after {secs} s")]
    Timeout { secs: u64 },
    #[error("endpoint returned HTTP {status}: {excerpt}")]
    Status { status: u16, excerpt: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("no replay fixture for request digest {digest}; record it with --record")]
    NoFixture { digest: String },
    #[error("fixture store {path}: {message}")]
    FixtureIo { path: PathBuf, message: String },
}

impl GatewayError {
    /// Failures worth another attempt.
    pub fn is_retryable(&self) -> bool {
        match self {
            GatewayError::RateLimited { .. } | GatewayError::Timeout { .. } => true,
            GatewayError::Status { status, .. } => *status >= 500,
            _ => false,
        }
    }
}

/// One chat-completion request as it goes over the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: Number,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    /// Request body: `model`, `temperature`, `messages[{role, content}]`.
    pub fn body(&self) -> DataNode {
        let messages = self
            .messages
            .iter()
            .map(|m| {
                let mut o = Map::new();
                o.insert("role".into(), m.role.as_str().into());
                o.insert("content".into(), m.content.as_str().into());
                DataNode::Object(o)
            })
            .collect();
        let mut body = Map::new();
        body.insert("model".into(), self.model.as_str().into());
        body.insert("temperature".into(), DataNode::Number(self.temperature.clone()));
        body.insert("messages".into(), DataNode::Array(messages));
        DataNode::Object(body)
    }

    /// Fixture key: hex SHA-256 of the compact request body.
    pub fn digest(&self) -> String {
        let text = serialize_json(&self.body(), true);
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

pub trait Transport: Send + Sync {
    /// Sends one request; no retries at this level.
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError>;
}

/// Checks preconditions, then sends with retry and exponential backoff.
pub fn complete(
    config: &GatewayConfig,
    transport: &dyn Transport,
    messages: &[ChatMessage],
) -> Result<String, GatewayError> {
    complete_with_sleep(config, transport, messages, std::thread::sleep)
}

pub fn complete_with_sleep(
    config: &GatewayConfig,
    transport: &dyn Transport,
    messages: &[ChatMessage],
    mut sleep: impl FnMut(Duration),
) -> Result<String, GatewayError> {
    if messages.is_empty() {
        return Err(GatewayError::EmptyMessages);
    }
    if let Some(index) = messages.iter().position(|m| m.content.trim().is_empty()) {
        return Err(GatewayError::EmptyContent { index });
    }
    let request = ChatRequest {
        model: config.model.clone(),
        temperature: config.temperature.clone(),
        messages: messages.to_vec(),
    };
    let digest = request.digest();
    let mut attempt = 0u32;
    loop {
        attempt += 1;
        tracing::debug!(model = %request.model, %digest, attempt, "chat completion");
        match transport.send(&request) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_retryable() && attempt <= config.max_retries => {
                let delay = config.retry_backoff.saturating_mul(1 << (attempt - 1).min(16));
                tracing::warn!(error = %e, attempt, ?delay, "retrying chat completion");
                sleep(delay);
            }
            Err(GatewayError::RateLimited { .. }) => {
                return Err(GatewayError::RateLimited { attempts: attempt })
            }
            Err(e) => return Err(e),
        }
    }
}

/// Extracts `choices[0].message.content`.
pub fn parse_completion(body: &str) -> Result<String, GatewayError> {
    let doc = parse_json(body).map_err(|e| GatewayError::Malformed(format!("not JSON: {e}")))?;
    let content = doc
        .get("choices")
        .and_then(DataNode::as_array)
        .and_then(|c| c.first())
        .and_then(|c| c.get("message"))
        .and_then(|m| m.get("content"));
    match content {
        Some(DataNode::String(s)) => Ok(s.clone()),
        Some(other) => Err(GatewayError::Malformed(format!(
            "choices[0].message.content is {}, expected string",
            other.kind().name()
        ))),
        None => Err(GatewayError::Malformed(
            "missing choices[0].message.content".into(),
        )),
    }
}

/// HTTP transport: `POST {base_url}/chat/completions` with a bearer key.
pub struct LiveTransport {
    url: String,
    key: ApiKey,
    timeout: Duration,
    agent: ureq::Agent,
}

impl LiveTransport {
    pub fn new(config: &GatewayConfig) -> Result<Self, GatewayError> {
        let key = config.api_key.clone().ok_or(GatewayError::MissingApiKey)?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(LiveTransport {
            url: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            key,
            timeout: config.timeout,
            agent,
        })
    }

    fn scrub(&self, text: &str) -> String {
        redact(text, Some(&self.key))
    }
}

impl Transport for LiveTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let body = serialize_json(&request.body(), true);
        let auth = format!("Bearer {}", self.key.expose());
        let result = self
            .agent
            .post(&self.url)
            .header("Authorization", &auth)
            .header("Content-Type", "application/json")
            .send(body.as_bytes());
        let mut response = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => {
                return Err(GatewayError::Timeout {
                    secs: self.timeout.as_secs(),
                })
            }
            Err(e) => return Err(GatewayError::Transport(self.scrub(&e.to_string()))),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(ureq::Error::Timeout(_)) => {
                return Err(GatewayError::Timeout {
                    secs: self.timeout.as_secs(),
                })
            }
            Err(e) => return Err(GatewayError::Transport(self.scrub(&e.to_string()))),
        };
        match status {
            200..=299 => parse_completion(&text).map_err(|e| match e {
                GatewayError::Malformed(m) => GatewayError::Malformed(self.scrub(&m)),
                other => other,
            }),
            401 | 403 => Err(GatewayError::Auth { status }),
            429 => Err(GatewayError::RateLimited { attempts: 1 }),
            _ => {
                let excerpt: String = self.scrub(&text).chars().take(BODY_EXCERPT).collect();
                Err(GatewayError::Status { status, excerpt })
            }
        }
    }
}

enum Store {
    Memory(HashMap<String, String>),
    Dir(PathBuf),
}

/// Answers from recorded fixtures keyed by [`ChatRequest::digest`].
pub struct ReplayTransport {
    store: Store,
}

impl ReplayTransport {
    pub fn from_map(records: HashMap<String, String>) -> Self {
        ReplayTransport {
            store: Store::Memory(records),
        }
    }

    /// Fixture directory with one `<digest>.txt` file per response.
    pub fn from_dir(dir: impl Into<PathBuf>) -> Self {
        ReplayTransport {
            store: Store::Dir(dir.into()),
        }
    }
}

pub fn fixture_path(dir: &Path, digest: &str) -> PathBuf {
    dir.join(format!("{digest}.txt"))
}

impl Transport for ReplayTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let digest = request.digest();
        match &self.store {
            Store::Memory(map) => map
                .get(&digest)
                .cloned()
                .ok_or(GatewayError::NoFixture { digest }),
            Store::Dir(dir) => {
                let path = fixture_path(dir, &digest);
                match fs::read_to_string(&path) {
                    Ok(text) => Ok(text),
                    Err(e) if e.kind() == io::ErrorKind::NotFound => {
                        Err(GatewayError::NoFixture { digest })
                    }
                    Err(e) => Err(GatewayError::FixtureIo {
                        path,
                        message: e.to_string(),
                    }),
                }
            }
        }
    }
}

/// Forwards to an inner transport and stores each answer as a fixture.
pub struct RecordingTransport {
    inner: Arc<dyn Transport>,
    dir: PathBuf,
}

impl RecordingTransport {
    pub fn new(inner: Arc<dyn Transport>, dir: impl Into<PathBuf>) -> Self {
        RecordingTransport {
            inner,
            dir: dir.into(),
        }
    }
}

impl Transport for RecordingTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let text = self.inner.send(request)?;
        let digest = request.digest();
        let path = fixture_path(&self.dir, &digest);
        let io_err = |e: io::Error| GatewayError::FixtureIo {
            path: path.clone(),
            message: e.to_string(),
        };
        fs::create_dir_all(&self.dir).map_err(io_err)?;
        let tmp = self.dir.join(format!(".{digest}.tmp"));
        fs::write(&tmp, &text).map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)?;
        tracing::info!(%digest, "recorded fixture");
        Ok(text)
    }
}
