mod support;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use optic::corpus::Label;
use optic::teacher::{
    canonical_response, label_batch, mock_router, mock_teacher, parse_verdict, FailureKind, HttpTeacher, LabelCache,
    PromptKind, PromptSpec, TeacherConfig,
};
use serde_json::{json, Value};

fn config(base: String) -> TeacherConfig {
    TeacherConfig {
        base_url: base,
        retry_base_delay: Duration::from_millis(1),
        timeout: Duration::from_secs(10),
        ..TeacherConfig::default()
    }
}

#[tokio::test]
async fn labels_through_the_wire_format() {
    let corpus = support::synth(200, 4);
    let (router, handle) = mock_router(&corpus.messages, 0.1, 9);
    let server = support::spawn(router).await;
    let cfg = config(server.url("/v1"));
    let teacher = HttpTeacher::with_api_key(&cfg, None).unwrap();
    let cache = LabelCache::in_memory();

    let report = label_batch(&corpus.messages, &PromptSpec::zero_shot(), &teacher, &cfg, &cache)
        .await
        .unwrap();
    assert_eq!(report.requests, 200);
    assert_eq!(handle.requests(), 200);
    for (m, r) in corpus.iter().zip(&report.results) {
        let v = r.as_ref().expect("every message labeled");
        let expected = parse_verdict(&mock_teacher(m, 0.1, 9).unwrap(), &m.id, "gpt-4-32k", PromptKind::ZeroShot).unwrap();
        assert_eq!(v.message_id, m.id);
        assert_eq!(v.label, expected.label);
        assert_eq!(v.raw, expected.raw);
    }

    let again = label_batch(&corpus.messages, &PromptSpec::zero_shot(), &teacher, &cfg, &cache)
        .await
        .unwrap();
    assert_eq!(again.requests, 0);
    assert_eq!(handle.requests(), 200);
    assert_eq!(again.results, report.results);
    server.shutdown().await;
}

#[derive(Default)]
struct Flaky {
    calls: AtomicUsize,
    fail_first: usize,
    status: u16,
    auth: Mutex<Vec<Option<String>>>,
}

async fn flaky(State(s): State<Arc<Flaky>>, headers: HeaderMap, Json(_): Json<Value>) -> (StatusCode, Json<Value>) {
    let n = s.calls.fetch_add(1, Ordering::SeqCst);
    let auth = headers.get("authorization").map(|h| h.to_str().unwrap().to_string());
    s.auth.lock().unwrap().push(auth);
    if n < s.fail_first {
        return (StatusCode::from_u16(s.status).unwrap(), Json(json!({"error": {"message": "busy"}})));
    }
    let content = canonical_response(Label::Admin, "Scheduling request.");
    (
        StatusCode::OK,
        Json(json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]})),
    )
}

async fn run_flaky(fail_first: usize, status: u16, n: usize) -> (optic::teacher::BatchReport, Arc<Flaky>) {
    let state = Arc::new(Flaky {
        fail_first,
        status,
        ..Flaky::default()
    });
    let router = Router::new().route("/v1/chat/completions", post(flaky)).with_state(state.clone());
    let server = support::spawn(router).await;
    let mut cfg = config(server.url("/v1"));
    cfg.max_parallel_requests = 1;
    let teacher = HttpTeacher::with_api_key(&cfg, Some("sk-test".into())).unwrap();
    let corpus = support::synth(n, 1);
    let report = label_batch(&corpus.messages, &PromptSpec::zero_shot(), &teacher, &cfg, &LabelCache::in_memory())
        .await
        .unwrap();
    server.shutdown().await;
    (report, state)
}

#[tokio::test]
async fn rate_limits_are_retried() {
    let (report, state) = run_flaky(2, 429, 3).await;
    assert_eq!(report.failures().count(), 0);
    assert_eq!(state.calls.load(Ordering::SeqCst), 5);
    assert!(report.verdicts().all(|v| v.label == Label::Admin));
    let auth = state.auth.lock().unwrap();
    assert!(auth.iter().all(|a| a.as_deref() == Some("Bearer sk-test")));
}

#[tokio::test]
async fn server_errors_give_up_after_retries() {
    let (report, state) = run_flaky(usize::MAX, 503, 2).await;
    // default budget: one attempt plus three retries per message
    assert_eq!(state.calls.load(Ordering::SeqCst), 8);
    for f in report.failures() {
        match &f.kind {
            FailureKind::Transport { attempts, error } => {
                assert_eq!(*attempts, 4);
                assert!(error.contains("503"), "{error}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
    assert_eq!(report.failure_rate(), 1.0);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let (report, state) = run_flaky(usize::MAX, 401, 2).await;
    assert_eq!(state.calls.load(Ordering::SeqCst), 2);
    assert_eq!(report.failures().count(), 2);
}

#[tokio::test]
async fn unreachable_server_is_a_transport_failure() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let mut cfg = config(format!("http://{addr}/v1"));
    cfg.max_retries = 1;
    let teacher = HttpTeacher::with_api_key(&cfg, None).unwrap();
    let corpus = support::synth(2, 1);
    let report = label_batch(&corpus.messages, &PromptSpec::zero_shot(), &teacher, &cfg, &LabelCache::in_memory())
        .await
        .unwrap();
    assert!(report
        .failures()
        .all(|f| matches!(f.kind, FailureKind::Transport { attempts: 2, .. })));
}
