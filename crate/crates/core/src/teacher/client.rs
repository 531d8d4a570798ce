use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::corpus::Message;

pub const API_KEY_ENV: &str = "OPTIC_TEACHER_API_KEY";
pub const BASE_URL_ENV: &str = "OPTIC_TEACHER_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeacherConfig {
    pub base_url: String,
    pub model_id: String,
    pub max_parallel_requests: usize,
    pub max_retries: u32,
    #[serde(with = "millis")]
    pub timeout: Duration,
    pub temperature: f64,
    /// First retry delay, doubled on every further attempt.
    #[serde(with = "millis")]
    pub retry_base_delay: Duration,
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.to_string(),
            model_id: "gpt-4-32k".to_string(),
            max_parallel_requests: 8,
            max_retries: 3,
            timeout: Duration::from_secs(60),
            temperature: 0.0,
            retry_base_delay: Duration::from_millis(500),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("max_parallel_requests must be at least 1")]
    NoParallelism,
    #[error("temperature must be finite and non-negative")]
    BadTemperature,
    #[error("base url is empty")]
    EmptyBaseUrl,
}

impl TeacherConfig {
    pub fn with_model(model_id: &str) -> Self {
        Self {
            model_id: model_id.to_string(),
            ..Self::default()
        }
    }

    /// Default config with the base URL taken from the environment when set.
    pub fn from_env(model_id: &str) -> Self {
        let mut c = Self::with_model(model_id);
        if let Ok(url) = std::env::var(BASE_URL_ENV) {
            if !url.trim().is_empty() {
                c.base_url = url;
            }
        }
        c
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_parallel_requests == 0 {
            return Err(ConfigError::NoParallelism);
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(ConfigError::BadTemperature);
        }
        if self.base_url.trim().is_empty() {
            return Err(ConfigError::EmptyBaseUrl);
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    pub fn new(model: &str, temperature: f64, system: &str, user: &str) -> Self {
        Self {
            model: model.to_string(),
            temperature,
            messages: vec![
                ChatMessage {
                    role: "system".into(),
                    content: system.to_string(),
                },
                ChatMessage {
                    role: "user".into(),
                    content: user.to_string(),
                },
            ],
        }
    }

    pub fn user_content(&self) -> Option<&str> {
        self.messages.iter().rev().find(|m| m.role == "user").map(|m| m.content.as_str())
    }
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ChatMessage,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("request timed out")]
    Timeout,
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("{0}")]
    Backend(String),
}

impl TransportError {
    /// Rate limits, server errors and network trouble are worth retrying;
    /// other client errors are not.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Status { status, .. } => *status == 429 || *status >= 500,
            TransportError::Timeout | TransportError::Network(_) => true,
            TransportError::BadResponse(_) | TransportError::Backend(_) => false,
        }
    }
}

/// Anything that can answer a chat completion for a message.
#[async_trait]
pub trait TeacherBackend: Send + Sync {
    async fn complete(&self, message: &Message, request: &ChatRequest) -> Result<String, TransportError>;
}

/// OpenAI-compatible chat completion client.
pub struct HttpTeacher {
    client: reqwest::Client,
    url: String,
    api_key: Option<String>,
}

impl HttpTeacher {
    pub fn new(config: &TeacherConfig) -> Result<Self, TransportError> {
        Self::with_api_key(config, std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()))
    }

    pub fn with_api_key(config: &TeacherConfig, api_key: Option<String>) -> Result<Self, TransportError> {
        let client = reqwest::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(Self {
            client,
            url: config.completions_url(),
            api_key,
        })
    }
}

#[async_trait]
impl TeacherBackend for HttpTeacher {
    async fn complete(&self, _message: &Message, request: &ChatRequest) -> Result<String, TransportError> {
        let mut builder = self.client.post(&self.url).json(request);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().await.map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Network(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            let body = response.text().await.unwrap_or_default();
            return Err(TransportError::Status {
                status: status.as_u16(),
                body,
            });
        }
        let parsed: ChatResponse = response
            .json()
            .await
            .map_err(|e| TransportError::BadResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::BadResponse("no choices".into()))
    }
}
