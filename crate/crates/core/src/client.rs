//! Chat-completion transport: live HTTP, recording, replay, and retries.
//!
//! Every backend implements [`ChatBackend`]. Wrappers compose: a live run
//! that records fixtures is `Recorder<Retry<OpenAiBackend>>`, an offline run
//! is a [`ReplayBackend`] loaded from the recorded file.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("fixture not found for request {fingerprint}")]
    FixtureNotFound { fingerprint: String },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    MalformedResponse(String),
    #[error("giving up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<ClientError> },
    #[error("fixture file {path}, line {line}: {message}")]
    FixtureFormat { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ClientError {
    pub fn is_retryable(&self) -> bool {
        match self {
            ClientError::Transport(_) => true,
            ClientError::Http { status, .. } => matches!(status, 408 | 429 | 500..=599),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }
}

/// A validated chat-completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_output_tokens: u32,
}

impl CompletionRequest {
    pub fn new(
        model: impl Into<String>,
        messages: Vec<Message>,
        temperature: f64,
        max_output_tokens: u32,
    ) -> Result<Self, ClientError> {
        if messages.is_empty() {
            return Err(ClientError::InvalidRequest("messages must not be empty".into()));
        }
        if !(0.0..=2.0).contains(&temperature) {
            return Err(ClientError::InvalidRequest(format!(
                "temperature {temperature} outside [0, 2]"
            )));
        }
        if max_output_tokens == 0 {
            return Err(ClientError::InvalidRequest("max_output_tokens must be positive".into()));
        }
        Ok(CompletionRequest {
            model: model.into(),
            messages,
            temperature,
            max_output_tokens,
        })
    }

    /// SHA-256 over the canonical JSON of (model, messages, temperature).
    /// Object keys are emitted in sorted order.
    pub fn fingerprint(&self) -> String {
        let canonical = json!({
            "messages": self.messages.iter()
                .map(|m| json!({"content": m.content, "role": m.role}))
                .collect::<Vec<_>>(),
            "model": self.model,
            "temperature": self.temperature,
        });
        let bytes = serde_json::to_vec(&canonical).expect("request serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

pub trait ChatBackend: Send + Sync {
    /// Returns the first message content of the completion.
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for Arc<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for Box<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        (**self).complete(request)
    }
}

impl<B: ChatBackend + ?Sized> ChatBackend for &B {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        (**self).complete(request)
    }
}

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub fingerprint: String,
    pub request: CompletionRequest,
    pub response: String,
}

pub fn read_fixtures(path: &Path) -> Result<Vec<FixtureRecord>, ClientError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FixtureRecord =
            serde_json::from_str(&line).map_err(|e| ClientError::FixtureFormat {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        out.push(record);
    }
    Ok(out)
}

/// Serves recorded responses by request fingerprint.
///
/// A fingerprint recorded several times (retried sampling) is served in
/// recorded order; after the last recording it keeps returning the last one.
pub struct ReplayBackend {
    responses: HashMap<String, Vec<String>>,
    cursors: HashMap<String, AtomicUsize>,
}

impl ReplayBackend {
    pub fn from_records<I: IntoIterator<Item = FixtureRecord>>(records: I) -> Self {
        let mut responses: HashMap<String, Vec<String>> = HashMap::new();
        for r in records {
            responses.entry(r.fingerprint).or_default().push(r.response);
        }
        let cursors = responses
            .keys()
            .map(|k| (k.clone(), AtomicUsize::new(0)))
            .collect();
        ReplayBackend { responses, cursors }
    }

    pub fn load(path: &Path) -> Result<Self, ClientError> {
        Ok(Self::from_records(read_fixtures(path)?))
    }

    pub fn len(&self) -> usize {
        self.responses.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let fingerprint = request.fingerprint();
        let Some(stored) = self.responses.get(&fingerprint) else {
            return Err(ClientError::FixtureNotFound { fingerprint });
        };
        let idx = self.cursors[&fingerprint].fetch_add(1, Ordering::Relaxed);
        Ok(stored[idx.min(stored.len() - 1)].clone())
    }
}

enum Sink {
    File(File),
    Memory(Vec<FixtureRecord>),
}

/// Passes requests to an inner backend and appends every successful
/// exchange to a fixture store.
pub struct Recorder<B> {
    inner: B,
    sink: Mutex<Sink>,
}

impl<B: ChatBackend> Recorder<B> {
    /// Appends to `path`, creating it if needed.
    pub fn to_file(inner: B, path: &Path) -> Result<Self, ClientError> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Recorder {
            inner,
            sink: Mutex::new(Sink::File(file)),
        })
    }

    pub fn in_memory(inner: B) -> Self {
        Recorder {
            inner,
            sink: Mutex::new(Sink::Memory(Vec::new())),
        }
    }

    /// Records captured so far by an in-memory recorder.
    pub fn records(&self) -> Vec<FixtureRecord> {
        match &*self.sink.lock().expect("recorder lock") {
            Sink::Memory(v) => v.clone(),
            Sink::File(_) => Vec::new(),
        }
    }
}

impl<B: ChatBackend> ChatBackend for Recorder<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let response = self.inner.complete(request)?;
        let record = FixtureRecord {
            fingerprint: request.fingerprint(),
            request: request.clone(),
            response: response.clone(),
        };
        let mut sink = self.sink.lock().expect("recorder lock");
        match &mut *sink {
            Sink::File(f) => {
                let mut line = serde_json::to_string(&record).expect("record serializes");
                line.push('\n');
                f.write_all(line.as_bytes())?;
                f.flush()?;
            }
            Sink::Memory(v) => v.push(record),
        }
        Ok(response)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            retries: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): base × 2^retry.
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay * 2u32.saturating_pow(retry)
    }
}

type Sleeper = Box<dyn Fn(Duration) + Send + Sync>;

/// Retries retryable failures with exponential backoff.
pub struct Retry<B> {
    inner: B,
    policy: RetryPolicy,
    sleep: Sleeper,
}

impl<B: ChatBackend> Retry<B> {
    pub fn new(inner: B, policy: RetryPolicy) -> Self {
        Retry {
            inner,
            policy,
            sleep: Box::new(std::thread::sleep),
        }
    }

    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }
}

impl<B: ChatBackend> ChatBackend for Retry<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let mut retry = 0;
        loop {
            match self.inner.complete(request) {
                Ok(text) => return Ok(text),
                Err(e) if e.is_retryable() && retry < self.policy.retries => {
                    tracing::warn!(attempt = retry + 1, error = %e, "retrying completion");
                    (self.sleep)(self.policy.delay(retry));
                    retry += 1;
                }
                Err(e) if e.is_retryable() => {
                    return Err(ClientError::RetriesExhausted {
                        attempts: retry + 1,
                        last: Box::new(e),
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Minimal JSON-over-HTTP POST, so the OpenAI-style backend can be tested
/// without sockets.
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &serde_json::Value,
    ) -> Result<HttpReply, ClientError>;
}

pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, ClientError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ClientError::Configuration(e.to_string()))?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: &str,
        body: &serde_json::Value,
    ) -> Result<HttpReply, ClientError> {
        let resp = self
            .client
            .post(url)
            .bearer_auth(bearer)
            .header("content-type", "application/json")
            .body(body.to_string())
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(HttpReply { status, body })
    }
}

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

/// OpenAI-compatible `/chat/completions` backend.
pub struct OpenAiBackend {
    api_key: String,
    base_url: String,
    transport: Box<dyn Transport>,
}

impl OpenAiBackend {
    /// Fails with a configuration error when no key is given; nothing touches
    /// the network before that check.
    pub fn new(
        api_key: Option<String>,
        base_url: Option<String>,
        transport: Box<dyn Transport>,
    ) -> Result<Self, ClientError> {
        let api_key = api_key
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| ClientError::Configuration("no API key configured".into()))?;
        Ok(OpenAiBackend {
            api_key,
            base_url: base_url.unwrap_or_else(|| DEFAULT_BASE_URL.to_string()),
            transport,
        })
    }
}

impl ChatBackend for OpenAiBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, ClientError> {
        let url = format!("{}/chat/completions", self.base_url.trim_end_matches('/'));
        let body = json!({
            "model": request.model,
            "messages": request.messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        let reply = self.transport.post_json(&url, &self.api_key, &body)?;
        if !(200..300).contains(&reply.status) {
            return Err(ClientError::Http {
                status: reply.status,
                body: reply.body,
            });
        }
        let value: serde_json::Value = serde_json::from_str(&reply.body)
            .map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ClientError::MalformedResponse("missing choices[0].message.content".into()))
    }
}
