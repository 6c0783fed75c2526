//! Chat-completion client plumbing shared by the pair classifier and the
//! paraphrasing pipeline.
//!
//! The wire format is an OpenAI-style chat completion: a JSON body with
//! `model`, `temperature` and a system + user `messages` list, answered by a
//! body whose `choices[0].message.content` holds the assistant text. The
//! bearer token is read from `COREF_LLM_TOKEN`.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub const TOKEN_ENV: &str = "COREF_LLM_TOKEN";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("server returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response body: {0}")]
    BadResponse(String),
    #[error("invalid LLM configuration: {0}")]
    Config(String),
    #[error("scripted backend has no reply left")]
    Exhausted,
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        match self {
            LlmError::Transport(_) => true,
            LlmError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

fn default_temperature() -> f64 {
    0.7
}
fn default_retries() -> usize {
    3
}
fn default_in_flight() -> usize {
    4
}
fn default_backoff() -> u64 {
    500
}
fn default_timeout() -> u64 {
    120
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model_name: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Extra attempts after the first one.
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    /// Base delay before retrying a transport failure; doubles per attempt.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

impl LlmConfig {
    pub fn new(endpoint: impl Into<String>, model_name: impl Into<String>) -> Self {
        LlmConfig {
            endpoint: endpoint.into(),
            model_name: model_name.into(),
            temperature: default_temperature(),
            max_retries: default_retries(),
            max_in_flight: default_in_flight(),
            backoff_ms: default_backoff(),
            timeout_secs: default_timeout(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(LlmError::Config(format!("temperature {} < 0", self.temperature)));
        }
        if self.max_in_flight == 0 {
            return Err(LlmError::Config("max_in_flight must be positive".into()));
        }
        Ok(())
    }

    /// Reads a JSON config file.
    pub fn from_file(path: &Path) -> Result<Self, LlmError> {
        let text = fs::read_to_string(path)
            .map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        let cfg: LlmConfig = serde_json::from_str(&text)
            .map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system: String,
    pub user: String,
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError>;
}

/// Blocking HTTP chat-completion client.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    config: LlmConfig,
    token: Option<String>,
    requests: AtomicUsize,
}

impl HttpBackend {
    pub fn new(config: LlmConfig) -> Result<Self, LlmError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(HttpBackend {
            client,
            token: std::env::var(TOKEN_ENV).ok().filter(|t| !t.is_empty()),
            config,
            requests: AtomicUsize::new(0),
        })
    }

    /// Number of HTTP requests sent so far.
    pub fn requests_sent(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let body = json!({
            "model": self.config.model_name,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        self.requests.fetch_add(1, Ordering::Relaxed);
        let resp = req.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| LlmError::BadResponse(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::BadResponse("missing choices[0].message.content".into()))
    }
}

/// Replays canned replies in order and records every request it receives.
#[derive(Default)]
pub struct ScriptedBackend {
    replies: Mutex<VecDeque<Result<String, LlmError>>>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl ScriptedBackend {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend {
            replies: Mutex::new(replies.into_iter().map(|r| Ok(r.into())).collect()),
            seen: Mutex::new(Vec::new()),
        }
    }

    pub fn push_error(&self, err: LlmError) {
        self.replies.lock().unwrap().push_back(Err(err));
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap().clone()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        self.seen.lock().unwrap().push(request.clone());
        self.replies
            .lock()
            .unwrap()
            .pop_front()
            .unwrap_or(Err(LlmError::Exhausted))
    }
}

/// Answers each request with a closure.
pub struct FnBackend<F>(pub F);

impl<F> ChatBackend for FnBackend<F>
where
    F: Fn(&ChatRequest) -> Result<String, LlmError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        (self.0)(request)
    }
}

/// A parsed reply together with the raw text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange<T> {
    pub value: T,
    pub raw: String,
    pub attempts: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmFailure {
    #[error("no usable reply after {attempts} attempts: {reason}")]
    Malformed {
        attempts: usize,
        last_reply: String,
        reason: String,
    },
    #[error("request failed after {attempts} attempts: {error}")]
    Transport { attempts: usize, error: LlmError },
}

/// Sends `request` until `parse` accepts the reply, at most
/// `1 + config.max_retries` times. Retryable transport errors back off
/// exponentially; other transport errors abort immediately.
pub fn request_with_retries<T>(
    backend: &dyn ChatBackend,
    request: &ChatRequest,
    config: &LlmConfig,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Exchange<T>, LlmFailure> {
    let max_attempts = config.max_retries + 1;
    let mut last: Option<LlmFailure> = None;
    for attempt in 1..=max_attempts {
        match backend.complete(request) {
            Ok(reply) => match parse(&reply) {
                Ok(value) => {
                    return Ok(Exchange {
                        value,
                        raw: reply,
                        attempts: attempt,
                    })
                }
                Err(reason) => {
                    last = Some(LlmFailure::Malformed {
                        attempts: attempt,
                        last_reply: reply,
                        reason,
                    })
                }
            },
            Err(error) => {
                let retryable = error.is_retryable();
                last = Some(LlmFailure::Transport {
                    attempts: attempt,
                    error,
                });
                if !retryable {
                    break;
                }
                if attempt < max_attempts && config.backoff_ms > 0 {
                    let factor = 1u64 << (attempt - 1).min(10);
                    thread::sleep(Duration::from_millis(config.backoff_ms.saturating_mul(factor)));
                }
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Applies `f` to every item with at most `max_in_flight` calls running at
/// once. Results come back in input order.
pub fn map_bounded<T, R, F>(items: &[T], max_in_flight: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = max_in_flight.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}
