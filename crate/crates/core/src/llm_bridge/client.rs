use std::fmt;
use std::str::FromStr;
use std::sync::{Condvar, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::transcript::{ChatRequest, ChatTranscript, TranscriptCache};
use crate::error::{Error, Result};

pub const ENV_BASE_URL: &str = "RECEVAL_LLM_BASE_URL";
pub const ENV_MODEL: &str = "RECEVAL_LLM_MODEL";
pub const ENV_API_KEY: &str = "RECEVAL_LLM_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChatMode {
    /// Always query the endpoint; nothing is cached.
    Live,
    /// Serve cached transcripts, query and cache the rest.
    Record,
    /// Serve cached transcripts only.
    Replay,
}

impl fmt::Display for ChatMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChatMode::Live => "live",
            ChatMode::Record => "record",
            ChatMode::Replay => "replay",
        })
    }
}

impl FromStr for ChatMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "live" => Ok(ChatMode::Live),
            "record" => Ok(ChatMode::Record),
            "replay" => Ok(ChatMode::Replay),
            _ => Err(Error::InvalidArgument(format!("unknown chat mode {s:?}"))),
        }
    }
}

/// Anything that can answer a chat request with response text.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String>;
}

/// Connection settings for an OpenAI-style chat-completion endpoint. The
/// key is never serialized.
#[derive(Clone)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub max_in_flight: usize,
    pub max_attempts: usize,
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl fmt::Debug for EndpointConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EndpointConfig")
            .field("base_url", &self.base_url)
            .field("model", &self.model)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("max_in_flight", &self.max_in_flight)
            .field("max_attempts", &self.max_attempts)
            .finish()
    }
}

impl EndpointConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            max_in_flight: 4,
            max_attempts: 5,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads base URL, model and key from the environment.
    pub fn from_env() -> Result<Self> {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let base_url = get(ENV_BASE_URL).ok_or_else(|| Error::Endpoint(format!("{ENV_BASE_URL} is not set")))?;
        let model = get(ENV_MODEL).ok_or_else(|| Error::Endpoint(format!("{ENV_MODEL} is not set")))?;
        Ok(Self {
            api_key: get(ENV_API_KEY),
            ..Self::new(base_url, model)
        })
    }
}

/// Counting semaphore bounding concurrent requests.
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slot lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("slot lock");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slot lock") += 1;
        self.0.cv.notify_one();
    }
}

/// Blocking HTTP client for `POST {base_url}/chat/completions`.
pub struct HttpBackend {
    config: EndpointConfig,
    client: reqwest::blocking::Client,
    slots: Slots,
}

enum Attempt {
    Done(String),
    Retry(String, bool),
    Fatal(Error),
}

impl HttpBackend {
    pub fn new(config: EndpointConfig) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| Error::Endpoint(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            slots: Slots::new(config.max_in_flight),
            config,
            client,
        })
    }

    fn url(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, request: &ChatRequest) -> Attempt {
        let mut body = json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": request.messages,
        });
        if let Some(m) = request.max_tokens {
            body["max_tokens"] = json!(m);
        }
        let mut req = self.client.post(self.url()).json(&body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() => return Attempt::Retry(e.to_string(), false),
            Err(e) => return Attempt::Fatal(Error::Endpoint(e.to_string())),
        };
        let status = resp.status();
        let text = resp.text().unwrap_or_default();
        if status.as_u16() == 429 {
            return Attempt::Retry(format!("HTTP 429: {text}"), true);
        }
        if status.is_server_error() {
            return Attempt::Retry(format!("HTTP {status}: {text}"), false);
        }
        if !status.is_success() {
            return Attempt::Fatal(Error::Endpoint(format!("HTTP {status}: {text}")));
        }
        let value: serde_json::Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Fatal(Error::Endpoint(format!("response is not JSON: {e}"))),
        };
        match value["choices"][0]["message"]["content"].as_str() {
            Some(content) => Attempt::Done(content.to_string()),
            None => Attempt::Fatal(Error::Endpoint("response has no choices[0].message.content".into())),
        }
    }
}

impl ChatBackend for HttpBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String> {
        let _slot = self.slots.acquire();
        let mut delay = self.config.initial_backoff;
        let attempts = self.config.max_attempts.max(1);
        for n in 1..=attempts {
            match self.attempt(request) {
                Attempt::Done(text) => return Ok(text),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(why, rate_limited) => {
                    if n == attempts {
                        return Err(if rate_limited {
                            Error::RateLimited(attempts)
                        } else {
                            Error::Endpoint(format!("giving up after {attempts} attempts: {why}"))
                        });
                    }
                    log::warn!("attempt {n}/{attempts} failed ({why}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                }
            }
        }
        unreachable!("the last attempt always returns")
    }
}

/// Routes requests through the transcript cache according to the mode.
pub struct ChatSession {
    mode: ChatMode,
    cache: Option<TranscriptCache>,
    backend: Option<Box<dyn ChatBackend>>,
}

impl ChatSession {
    pub fn new(mode: ChatMode, cache: Option<TranscriptCache>, backend: Option<Box<dyn ChatBackend>>) -> Result<Self> {
        if mode != ChatMode::Live && cache.is_none() {
            return Err(Error::InvalidArgument(format!("{mode} mode needs a transcript cache")));
        }
        if mode != ChatMode::Replay && backend.is_none() {
            return Err(Error::Endpoint(format!("{mode} mode needs a configured endpoint")));
        }
        Ok(Self { mode, cache, backend })
    }

    pub fn mode(&self) -> ChatMode {
        self.mode
    }

    pub fn chat_complete(&self, request: &ChatRequest) -> Result<String> {
        let key = request.replay_key();
        if self.mode != ChatMode::Live {
            let cache = self.cache.as_ref().expect("checked in new");
            if let Some(t) = cache.get(&key)? {
                return Ok(t.response);
            }
            if self.mode == ChatMode::Replay {
                return Err(Error::MissingTranscript(key));
            }
        }
        let backend = self.backend.as_ref().expect("checked in new");
        let response = backend.complete(request)?;
        match (&self.cache, self.mode) {
            (Some(cache), ChatMode::Record) => {
                let recorded_at = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                let stored = cache.put(&ChatTranscript {
                    key,
                    request: request.clone(),
                    response,
                    recorded_at,
                })?;
                Ok(stored.response)
            }
            _ => Ok(response),
        }
    }
}
