use std::future::Future;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;

use super::review::{Progress, ReviewError, ReviewItem, ReviewStats, ReviewStore, ReviewVerdict};
use crate::corpus::Label;
use crate::student::{label_for_score, load_model, StudentError, StudentModel};

/// Largest accepted classification text, in bytes.
pub const MAX_TEXT_BYTES: usize = 32 * 1024;
// JSON escaping can inflate text up to six-fold
const MAX_BODY_BYTES: usize = 8 * MAX_TEXT_BYTES;

#[derive(Clone)]
pub struct AppState {
    model: Arc<StudentModel>,
    model_version: Arc<str>,
    store: Arc<Mutex<ReviewStore>>,
}

impl AppState {
    pub fn new(model: StudentModel, store: ReviewStore) -> Self {
        Self {
            model_version: model.model_version().into(),
            model: Arc::new(model),
            store: Arc::new(Mutex::new(store)),
        }
    }

    pub fn model(&self) -> &StudentModel {
        &self.model
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        if r.status() == StatusCode::PAYLOAD_TOO_LARGE {
            ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "payload_too_large", r.body_text())
        } else {
            ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", r.body_text())
        }
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        let (status, code) = match &e {
            ReviewError::Duplicate { .. } => (StatusCode::CONFLICT, "duplicate_verdict"),
            ReviewError::UnknownMessage(_) => (StatusCode::NOT_FOUND, "unknown_message"),
            ReviewError::Invalid(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_verdict"),
            ReviewError::CorruptLog { .. } | ReviewError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "store_error"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub label: Label,
    pub confidence: f64,
    pub model_version: String,
    pub latency_ms: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NextItem {
    pub item: ReviewItem,
    pub progress: Progress,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerdictRequest {
    pub message_id: String,
    pub reviewer_id: String,
    pub agrees: bool,
    #[serde(default)]
    pub corrected_label: Option<Label>,
    #[serde(default)]
    pub note: String,
    /// Server time is used when absent.
    #[serde(default)]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
struct NextQuery {
    reviewer: Option<String>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/classify", post(classify))
        .route("/v1/review/next", get(review_next))
        .route("/v1/review/verdict", post(review_verdict))
        .route("/v1/review/stats", get(review_stats))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({"status": "ok", "model_version": &*state.model_version}))
}

async fn classify(
    State(state): State<AppState>,
    body: Result<Json<ClassifyRequest>, JsonRejection>,
) -> Result<Json<ClassifyResponse>, ApiError> {
    let started = Instant::now();
    let Json(req) = body?;
    if req.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "empty_text", "text is empty"));
    }
    if req.text.len() > MAX_TEXT_BYTES {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            format!("text is {} bytes, limit is {MAX_TEXT_BYTES}", req.text.len()),
        ));
    }
    let confidence = state.model.predict_score(&req.text);
    Ok(Json(ClassifyResponse {
        label: label_for_score(confidence),
        confidence,
        model_version: state.model_version.to_string(),
        latency_ms: started.elapsed().as_secs_f64() * 1e3,
    }))
}

async fn review_next(
    State(state): State<AppState>,
    query: Result<Query<NextQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(q) = query.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.body_text()))?;
    let reviewer = q
        .reviewer
        .filter(|r| !r.trim().is_empty())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing_reviewer", "reviewer query parameter is required"))?;
    let next = state.store.lock().unwrap().next_for(&reviewer);
    Ok(match next {
        Some((item, progress)) => Json(NextItem { item, progress }).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn review_verdict(
    State(state): State<AppState>,
    body: Result<Json<VerdictRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<ReviewVerdict>), ApiError> {
    let Json(req) = body?;
    let verdict = ReviewVerdict {
        message_id: req.message_id,
        reviewer_id: req.reviewer_id,
        agrees: req.agrees,
        corrected_label: req.corrected_label,
        note: req.note,
        timestamp: req.timestamp.unwrap_or_else(Utc::now),
    };
    state.store.lock().unwrap().submit(verdict.clone())?;
    Ok((StatusCode::CREATED, Json(verdict)))
}

async fn review_stats(State(state): State<AppState>) -> Json<ReviewStats> {
    Json(state.store.lock().unwrap().stats())
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot load model: {0}")]
    Model(#[from] StudentError),
    #[error("model self-check failed: {0}")]
    SelfCheck(String),
    #[error("cannot open review store: {0}")]
    Store(#[from] ReviewError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Loads the model and checks it is usable: file checksum (verified on
/// load), a training fingerprint and finite parameters.
pub fn load_checked_model(path: &Path) -> Result<StudentModel, ServeError> {
    let model = load_model(path)?;
    if model.training_fingerprint.is_empty() {
        return Err(ServeError::SelfCheck("model has no training fingerprint".into()));
    }
    if model.weights.iter().any(|w| !w.is_finite()) || !model.bias.is_finite() {
        return Err(ServeError::SelfCheck("model has non-finite parameters".into()));
    }
    Ok(model)
}

/// Serves on an already bound listener until `shutdown` resolves, then
/// drains in-flight requests.
pub async fn serve_listener<F>(listener: TcpListener, state: AppState, shutdown: F) -> Result<(), ServeError>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await?;
    Ok(())
}

pub async fn bind(addr: &str) -> Result<TcpListener, ServeError> {
    TcpListener::bind(addr).await.map_err(|source| ServeError::Bind {
        addr: addr.to_string(),
        source,
    })
}

/// Loads model and store, binds, and serves until Ctrl-C.
pub async fn serve(model_path: &Path, store_path: &Path, addr: &str) -> Result<(), ServeError> {
    let model = load_checked_model(model_path)?;
    let store = ReviewStore::open(store_path)?;
    let listener = bind(addr).await?;
    let local: SocketAddr = listener.local_addr()?;
    tracing::info!(%local, version = %model.model_version(), "serving");
    serve_listener(listener, AppState::new(model, store), async {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
    })
    .await
}
