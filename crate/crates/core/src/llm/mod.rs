//! Chat-completion access with record/replay.
//!
//! A [`Gateway`] runs in one of four modes:
//!
//! * `live` sends every request through a [`Transport`] with exponential backoff.
//! * `record` behaves like `live` and appends each exchange to a cache file.
//! * `replay` answers only from a cache file and never touches the network.
//!   A request whose key is not cached is a hard error.
//! * `scripted` pops canned replies from a queue, for tests and offline runs.
//!
//! Cache keys are SHA-256 digests over `(model_id, prompt, temperature)`, so
//! a recorded experiment can be re-run bit-for-bit without network access.

mod cache;
mod http;

use std::collections::VecDeque;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use cache::ExchangeCache;
pub use http::{HttpTransport, DEFAULT_ENDPOINT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model_id: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn new(model_id: impl Into<String>, prompt: impl Into<String>, temperature: f64) -> Self {
        Self {
            model_id: model_id.into(),
            prompt: prompt.into(),
            temperature,
            max_tokens: 512,
        }
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    /// Hex SHA-256 of the JSON array `[model_id, prompt, temperature]`.
    pub fn cache_key(&self) -> String {
        let canonical = serde_json::to_string(&(&self.model_id, &self.prompt, self.temperature))
            .expect("strings and finite floats always serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

/// One request/response pair as stored in the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub key: String,
    pub request: ChatRequest,
    pub response_text: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl ChatExchange {
    pub fn new(request: ChatRequest, response_text: String) -> Self {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            key: request.cache_key(),
            request,
            response_text,
            timestamp,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GatewayMode {
    Live,
    Record,
    Replay,
    #[default]
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct TransportError {
    pub message: String,
    pub retryable: bool,
}

impl TransportError {
    pub fn retryable(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            retryable: true,
        }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            retryable: false,
        }
    }
}

/// Something that can perform one chat-completion round trip.
pub trait Transport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("no cached response for key {key}")]
    ReplayMiss { key: String },
    #[error("scripted reply queue is exhausted")]
    ScriptExhausted,
    #[error("transport failed after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        #[source]
        source: TransportError,
    },
    #[error("cache file {path}: {message}")]
    Cache { path: String, message: String },
    #[error("{mode:?} mode requires a transport")]
    MissingTransport { mode: GatewayMode },
    #[error("prompt is empty")]
    EmptyPrompt,
}

impl GatewayError {
    /// Errors that must abort a run instead of triggering a caller fallback.
    pub fn is_fatal(&self) -> bool {
        matches!(
            self,
            GatewayError::ReplayMiss { .. }
                | GatewayError::Cache { .. }
                | GatewayError::MissingTransport { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 5,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based).
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay.mul_f64(self.factor.powi(retry as i32))
    }
}

pub struct Gateway {
    mode: GatewayMode,
    transport: Option<Arc<dyn Transport>>,
    cache: Option<ExchangeCache>,
    script: Mutex<VecDeque<String>>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("mode", &self.mode)
            .field("has_transport", &self.transport.is_some())
            .field("cached", &self.cache.as_ref().map(ExchangeCache::len))
            .finish()
    }
}

impl Gateway {
    pub fn live(transport: Arc<dyn Transport>) -> Self {
        Self {
            mode: GatewayMode::Live,
            transport: Some(transport),
            cache: None,
            script: Mutex::new(VecDeque::new()),
            retry: RetryPolicy::default(),
        }
    }

    /// Live gateway that also appends every exchange to `cache_path`.
    pub fn record(
        transport: Arc<dyn Transport>,
        cache_path: impl AsRef<Path>,
    ) -> Result<Self, GatewayError> {
        Ok(Self {
            mode: GatewayMode::Record,
            transport: Some(transport),
            cache: Some(ExchangeCache::open_for_append(cache_path.as_ref())?),
            script: Mutex::new(VecDeque::new()),
            retry: RetryPolicy::default(),
        })
    }

    pub fn replay(cache_path: impl AsRef<Path>) -> Result<Self, GatewayError> {
        Ok(Self::replay_from(ExchangeCache::load(cache_path.as_ref())?))
    }

    pub fn replay_from(cache: ExchangeCache) -> Self {
        Self {
            mode: GatewayMode::Replay,
            transport: None,
            cache: Some(cache),
            script: Mutex::new(VecDeque::new()),
            retry: RetryPolicy::default(),
        }
    }

    pub fn scripted<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            mode: GatewayMode::Scripted,
            transport: None,
            cache: None,
            script: Mutex::new(replies.into_iter().map(Into::into).collect()),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Attaches a transport. Replay and scripted modes keep it but never call it.
    pub fn with_transport(mut self, transport: Arc<dyn Transport>) -> Self {
        self.transport = Some(transport);
        self
    }

    pub fn mode(&self) -> GatewayMode {
        self.mode
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        if request.prompt.is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        match self.mode {
            GatewayMode::Live => self.send_with_retry(request),
            GatewayMode::Record => {
                let text = self.send_with_retry(request)?;
                let cache = self.cache.as_ref().expect("record mode always has a cache");
                cache.append(ChatExchange::new(request.clone(), text.clone()))?;
                Ok(text)
            }
            GatewayMode::Replay => {
                let key = request.cache_key();
                self.cache
                    .as_ref()
                    .and_then(|c| c.get(&key))
                    .ok_or(GatewayError::ReplayMiss { key })
            }
            GatewayMode::Scripted => self
                .script
                .lock()
                .expect("script lock poisoned")
                .pop_front()
                .ok_or(GatewayError::ScriptExhausted),
        }
    }

    fn send_with_retry(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let transport = self
            .transport
            .as_ref()
            .ok_or(GatewayError::MissingTransport { mode: self.mode })?;
        let max_attempts = self.retry.max_attempts.max(1);
        let mut attempt = 0;
        loop {
            attempt += 1;
            match transport.send(request) {
                Ok(text) => return Ok(text),
                Err(err) if err.retryable && attempt < max_attempts => {
                    log::warn!("chat completion attempt {attempt} failed: {err}; retrying");
                    std::thread::sleep(self.retry.delay(attempt - 1));
                }
                Err(source) => {
                    return Err(GatewayError::Transport {
                        attempts: attempt,
                        source,
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Echo;

    impl Transport for Echo {
        fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
            Ok(format!("echo:{}", request.prompt))
        }
    }

    struct Flaky {
        failures: u32,
        calls: AtomicU32,
    }

    impl Transport for Flaky {
        fn send(&self, _: &ChatRequest) -> Result<String, TransportError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(TransportError::retryable("503"))
            } else {
                Ok("ok".into())
            }
        }
    }

    struct Forbidden;

    impl Transport for Forbidden {
        fn send(&self, _: &ChatRequest) -> Result<String, TransportError> {
            panic!("network used in an offline mode");
        }
    }

    fn no_wait() -> RetryPolicy {
        RetryPolicy {
            base_delay: Duration::ZERO,
            ..RetryPolicy::default()
        }
    }

    #[test]
    fn scripted_queue_semantics() {
        let gw = Gateway::scripted(["{\"work\":0.5,\"consumption\":0.5}"]);
        let req = ChatRequest::new("m", "hello", 0.7);
        assert_eq!(
            gw.complete(&req).unwrap(),
            "{\"work\":0.5,\"consumption\":0.5}"
        );
        assert!(matches!(
            gw.complete(&req),
            Err(GatewayError::ScriptExhausted)
        ));
    }

    #[test]
    fn key_depends_on_each_field() {
        let base = ChatRequest::new("m", "p", 0.7);
        let key = base.cache_key();
        assert_eq!(key.len(), 64);
        assert_eq!(
            key,
            ChatRequest::new("m", "p", 0.7)
                .with_max_tokens(9)
                .cache_key()
        );
        assert_ne!(key, ChatRequest::new("m2", "p", 0.7).cache_key());
        assert_ne!(key, ChatRequest::new("m", "p2", 0.7).cache_key());
        assert_ne!(key, ChatRequest::new("m", "p", 0.2).cache_key());
    }

    #[test]
    fn key_is_stable() {
        // Frozen value guards against accidental changes to the key encoding.
        let key = ChatRequest::new("qwen-turbo-2024-09-19", "hello", 0.7).cache_key();
        let expected = hex::encode(Sha256::digest(br#"["qwen-turbo-2024-09-19","hello",0.7]"#));
        assert_eq!(key, expected);
    }

    #[test]
    fn retries_with_backoff_then_succeeds() {
        let flaky = Arc::new(Flaky {
            failures: 3,
            calls: AtomicU32::new(0),
        });
        let gw = Gateway::live(flaky.clone()).with_retry(no_wait());
        assert_eq!(gw.complete(&ChatRequest::new("m", "p", 0.0)).unwrap(), "ok");
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn gives_up_after_max_attempts() {
        let flaky = Arc::new(Flaky {
            failures: 100,
            calls: AtomicU32::new(0),
        });
        let gw = Gateway::live(flaky.clone()).with_retry(no_wait());
        let err = gw.complete(&ChatRequest::new("m", "p", 0.0)).unwrap_err();
        assert!(matches!(err, GatewayError::Transport { attempts: 5, .. }));
        assert!(!err.is_fatal());
        assert_eq!(flaky.calls.load(Ordering::SeqCst), 5);
    }

    #[test]
    fn backoff_schedule() {
        let r = RetryPolicy::default();
        assert_eq!(r.delay(0), Duration::from_secs(1));
        assert_eq!(r.delay(1), Duration::from_secs(2));
        assert_eq!(r.delay(3), Duration::from_secs(8));
    }

    #[test]
    fn record_then_replay_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let prompts = ["a", "b\nwith newline", "ünïcode \"quoted\""];
        let recorded: Vec<String> = {
            let gw = Gateway::record(Arc::new(Echo), &path).unwrap();
            prompts
                .iter()
                .map(|p| gw.complete(&ChatRequest::new("m", *p, 0.7)).unwrap())
                .collect()
        };
        let gw = Gateway::replay(&path)
            .unwrap()
            .with_transport(Arc::new(Forbidden));
        for (p, text) in prompts.iter().zip(&recorded) {
            assert_eq!(&gw.complete(&ChatRequest::new("m", *p, 0.7)).unwrap(), text);
        }
    }

    #[test]
    fn replay_miss_names_the_key() {
        let gw = Gateway::replay_from(ExchangeCache::default()).with_transport(Arc::new(Forbidden));
        let req = ChatRequest::new("m", "unseen", 0.7);
        let err = gw.complete(&req).unwrap_err();
        assert!(err.is_fatal());
        assert!(err.to_string().contains(&req.cache_key()));
    }

    #[test]
    fn empty_prompt_rejected() {
        let gw = Gateway::scripted(["x"]);
        assert!(matches!(
            gw.complete(&ChatRequest::new("m", "", 0.1)),
            Err(GatewayError::EmptyPrompt)
        ));
    }

    #[test]
    fn live_without_transport_is_fatal() {
        let mut gw = Gateway::scripted(Vec::<String>::new());
        gw.mode = GatewayMode::Live;
        let err = gw.complete(&ChatRequest::new("m", "p", 0.1)).unwrap_err();
        assert!(err.is_fatal());
    }
}
