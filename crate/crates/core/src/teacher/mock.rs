use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::json;

use super::client::{ChatRequest, TeacherBackend, TransportError};
use super::prompt::{escape_delimiter, extract_message};
use super::verdict::canonical_response;
use crate::corpus::{Label, Message};
use crate::hashing::{hash64, unit_interval};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MockError {
    #[error("message {0} has no gold label")]
    NoGoldLabel(String),
    #[error("noise rate {0} outside [0, 1]")]
    BadNoise(f64),
}

pub fn canned_explanation(label: Label) -> &'static str {
    match label {
        Label::Admin => "Request concerns logistics or paperwork and lists no symptoms needing assessment.",
        Label::Clinical => "Message describes symptoms or treatment concerns that need clinical assessment.",
    }
}

/// Whether the mock flips this message's label.
pub fn mock_flips(message_id: &str, noise_rate: f64, seed: u64) -> bool {
    unit_interval(hash64(message_id.as_bytes(), seed ^ 0x6d6f_636b)) < noise_rate
}

/// Deterministic stand-in for the teacher: the gold label, flipped for a
/// hash-selected `noise_rate` fraction of message ids.
pub fn mock_teacher(message: &Message, noise_rate: f64, seed: u64) -> Result<String, MockError> {
    if !(0.0..=1.0).contains(&noise_rate) {
        return Err(MockError::BadNoise(noise_rate));
    }
    let gold = message.gold_label.ok_or_else(|| MockError::NoGoldLabel(message.id.clone()))?;
    let label = if mock_flips(&message.id, noise_rate, seed) { gold.flipped() } else { gold };
    Ok(canonical_response(label, canned_explanation(label)))
}

/// In-process mock backend that also records request concurrency.
#[derive(Debug, Default)]
pub struct MockBackend {
    pub noise_rate: f64,
    pub seed: u64,
    /// Artificial latency per request, to make overlap observable.
    pub delay: Option<Duration>,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    peak_in_flight: AtomicUsize,
}

impl MockBackend {
    pub fn new(noise_rate: f64, seed: u64) -> Self {
        Self {
            noise_rate,
            seed,
            ..Self::default()
        }
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn peak_in_flight(&self) -> usize {
        self.peak_in_flight.load(Ordering::SeqCst)
    }
}

#[async_trait]
impl TeacherBackend for MockBackend {
    async fn complete(&self, message: &Message, _request: &ChatRequest) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak_in_flight.fetch_max(now, Ordering::SeqCst);
        if let Some(d) = self.delay {
            tokio::time::sleep(d).await;
        } else {
            tokio::task::yield_now().await;
        }
        let out = mock_teacher(message, self.noise_rate, self.seed).map_err(|e| TransportError::Backend(e.to_string()));
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        out
    }
}

struct ServerState {
    by_text: HashMap<String, Message>,
    noise_rate: f64,
    seed: u64,
    requests: AtomicUsize,
}

/// Handle onto a running mock chat-completions server's counters.
#[derive(Clone)]
pub struct MockServerHandle {
    state: Arc<ServerState>,
}

impl MockServerHandle {
    pub fn requests(&self) -> usize {
        self.state.requests.load(Ordering::SeqCst)
    }
}

/// Router speaking the chat-completions wire format. The new message is
/// read back out of the user content and answered with [`mock_teacher`] for
/// the first corpus message with that text.
pub fn mock_router(messages: &[Message], noise_rate: f64, seed: u64) -> (Router, MockServerHandle) {
    let mut by_text = HashMap::new();
    for m in messages {
        by_text.entry(escape_delimiter(&m.text())).or_insert_with(|| m.clone());
    }
    let state = Arc::new(ServerState {
        by_text,
        noise_rate,
        seed,
        requests: AtomicUsize::new(0),
    });
    let router = Router::new()
        .route("/v1/chat/completions", post(handle_completion))
        .with_state(state.clone());
    (router, MockServerHandle { state })
}

async fn handle_completion(
    State(state): State<Arc<ServerState>>,
    Json(request): Json<ChatRequest>,
) -> Result<Json<serde_json::Value>, (StatusCode, Json<serde_json::Value>)> {
    state.requests.fetch_add(1, Ordering::SeqCst);
    let bad = |status: StatusCode, msg: String| (status, Json(json!({"error": {"message": msg}})));
    let user = request
        .user_content()
        .ok_or_else(|| bad(StatusCode::BAD_REQUEST, "no user message".into()))?;
    let text = extract_message(user).map_err(|e| bad(StatusCode::BAD_REQUEST, e.to_string()))?;
    let message = state
        .by_text
        .get(text)
        .ok_or_else(|| bad(StatusCode::NOT_FOUND, "unknown message".into()))?;
    let content = mock_teacher(message, state.noise_rate, state.seed)
        .map_err(|e| bad(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(Json(json!({
        "object": "chat.completion",
        "model": request.model,
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
    })))
}
