//! OpenAI-compatible chat-completions client.

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatRequest, Transport, TransportError};

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

pub struct HttpTransport {
    endpoint: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: impl Into<String>,
    ) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| TransportError::fatal(e.to_string()))?;
        Ok(Self {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            client,
        })
    }

    /// Reads the credential from the environment variable `key_var`.
    pub fn from_env(endpoint: impl Into<String>, key_var: &str) -> Result<Self, TransportError> {
        let key = std::env::var(key_var).map_err(|_| {
            TransportError::fatal(format!("environment variable {key_var} is not set"))
        })?;
        Self::new(endpoint, key)
    }
}

pub(crate) fn request_body(request: &ChatRequest) -> Value {
    json!({
        "model": request.model_id,
        "messages": [{ "role": "user", "content": request.prompt }],
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    })
}

pub(crate) fn response_text(body: &Value) -> Result<String, TransportError> {
    body.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| TransportError::fatal("response has no choices[0].message.content"))
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .header("content-type", "application/json")
            .body(request_body(request).to_string())
            .send()
            .map_err(|e| TransportError::retryable(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| TransportError::retryable(e.to_string()))?;
        if !status.is_success() {
            let msg = format!(
                "HTTP {status}: {}",
                text.chars().take(300).collect::<String>()
            );
            return Err(if status.as_u16() == 429 || status.is_server_error() {
                TransportError::retryable(msg)
            } else {
                TransportError::fatal(msg)
            });
        }
        let body: Value =
            serde_json::from_str(&text).map_err(|e| TransportError::fatal(e.to_string()))?;
        response_text(&body)
    }
}
