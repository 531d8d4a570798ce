use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Duration;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::cache::LabelCache;
use super::client::{ChatRequest, ConfigError, TeacherBackend, TeacherConfig, TransportError};
use super::prompt::{message_block, PromptError, PromptSpec};
use super::verdict::{parse_verdict, TeacherVerdict};
use crate::corpus::Message;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureKind {
    /// The teacher answered but no label could be read; needs manual review.
    Parse { raw: String, reason: String },
    Transport { error: String, attempts: u32 },
    Prompt { error: String },
    /// Not attempted because the batch was aborted.
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelFailure {
    pub message_id: String,
    #[serde(flatten)]
    pub kind: FailureKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchReport {
    /// One entry per input message, in input order.
    pub results: Vec<Result<TeacherVerdict, LabelFailure>>,
    pub requests: usize,
    pub cache_hits: usize,
}

impl BatchReport {
    pub fn verdicts(&self) -> impl Iterator<Item = &TeacherVerdict> {
        self.results.iter().filter_map(|r| r.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &LabelFailure> {
        self.results.iter().filter_map(|r| r.as_ref().err())
    }

    pub fn failure_rate(&self) -> f64 {
        if self.results.is_empty() {
            0.0
        } else {
            self.failures().count() as f64 / self.results.len() as f64
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("label cache write failed: {source}")]
    Cache {
        source: std::io::Error,
        partial: BatchReport,
    },
}

enum Outcome {
    Done(Result<TeacherVerdict, LabelFailure>),
    CacheFailed(TeacherVerdict, std::io::Error),
}

/// Labels every message with the teacher. Cached verdicts are reused, the
/// rest are requested with at most `max_parallel_requests` in flight and
/// retried with exponential backoff on retryable transport errors.
pub async fn label_batch(
    messages: &[Message],
    prompt: &PromptSpec,
    backend: &dyn TeacherBackend,
    config: &TeacherConfig,
    cache: &LabelCache,
) -> Result<BatchReport, BatchError> {
    config.validate()?;
    let system = prompt.preamble()?;
    let requests = AtomicUsize::new(0);
    let hits = AtomicUsize::new(0);
    let aborted = AtomicBool::new(false);

    let ctx = Ctx {
        prompt,
        backend,
        config,
        cache,
        system: &system,
        requests: &requests,
        hits: &hits,
        aborted: &aborted,
    };

    let outcomes: Vec<Outcome> = stream::iter(messages)
        .map(|m| label_one(&ctx, m))
        .buffered(config.max_parallel_requests)
        .collect()
        .await;

    let mut cache_error = None;
    let results = outcomes
        .into_iter()
        .map(|o| match o {
            Outcome::Done(r) => r,
            Outcome::CacheFailed(v, e) => {
                cache_error.get_or_insert(e);
                Ok(v)
            }
        })
        .collect();
    let report = BatchReport {
        results,
        requests: requests.into_inner(),
        cache_hits: hits.into_inner(),
    };
    match cache_error {
        Some(source) => Err(BatchError::Cache {
            source,
            partial: report,
        }),
        None => Ok(report),
    }
}

struct Ctx<'a> {
    prompt: &'a PromptSpec,
    backend: &'a dyn TeacherBackend,
    config: &'a TeacherConfig,
    cache: &'a LabelCache,
    system: &'a str,
    requests: &'a AtomicUsize,
    hits: &'a AtomicUsize,
    aborted: &'a AtomicBool,
}

async fn label_one(ctx: &Ctx<'_>, message: &Message) -> Outcome {
    let fail = |kind| {
        Outcome::Done(Err(LabelFailure {
            message_id: message.id.clone(),
            kind,
        }))
    };
    let (kind, model) = (ctx.prompt.kind, ctx.config.model_id.as_str());
    if let Some(v) = ctx.cache.get(&message.id, kind, model) {
        ctx.hits.fetch_add(1, Ordering::SeqCst);
        return Outcome::Done(Ok(v));
    }
    if ctx.aborted.load(Ordering::SeqCst) {
        return fail(FailureKind::Aborted);
    }
    let user = match message_block(&message.text()) {
        Ok(u) => u,
        Err(e) => return fail(FailureKind::Prompt { error: e.to_string() }),
    };
    let request = ChatRequest::new(model, ctx.config.temperature, ctx.system, &user);
    let raw = match complete_with_retries(ctx.backend, message, &request, ctx.config, ctx.requests).await {
        Ok(raw) => raw,
        Err((error, attempts)) => {
            return fail(FailureKind::Transport {
                error: error.to_string(),
                attempts,
            })
        }
    };
    match parse_verdict(&raw, &message.id, model, kind) {
        Ok(v) => match ctx.cache.insert(v.clone()) {
            Ok(_) => Outcome::Done(Ok(v)),
            Err(e) => {
                ctx.aborted.store(true, Ordering::SeqCst);
                Outcome::CacheFailed(v, e)
            }
        },
        Err(p) => fail(FailureKind::Parse {
            raw: p.raw,
            reason: p.reason,
        }),
    }
}

async fn complete_with_retries(
    backend: &dyn TeacherBackend,
    message: &Message,
    request: &ChatRequest,
    config: &TeacherConfig,
    requests: &AtomicUsize,
) -> Result<String, (TransportError, u32)> {
    let mut attempt = 0u32;
    loop {
        requests.fetch_add(1, Ordering::SeqCst);
        attempt += 1;
        match backend.complete(message, request).await {
            Ok(raw) => return Ok(raw),
            Err(e) if e.is_retryable() && attempt <= config.max_retries => {
                tokio::time::sleep(backoff(config.retry_base_delay, attempt - 1)).await;
            }
            Err(e) => return Err((e, attempt)),
        }
    }
}

/// Delay before retry number `retry` (0-based): `base * 2^retry`, capped.
pub fn backoff(base: Duration, retry: u32) -> Duration {
    base.saturating_mul(1u32 << retry.min(16)).min(Duration::from_secs(60))
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use async_trait::async_trait;

    use super::*;
    use crate::corpus::{generate_synthetic, SynthConfig};
    use crate::teacher::mock::MockBackend;

    fn corpus(n: usize) -> Vec<Message> {
        let mut m = generate_synthetic(&SynthConfig::new(n.max(2), 3)).unwrap().messages;
        m.truncate(n);
        m
    }

    fn fast_config() -> TeacherConfig {
        TeacherConfig {
            retry_base_delay: Duration::from_millis(1),
            ..TeacherConfig::default()
        }
    }

    #[tokio::test]
    async fn noise_free_mock_reproduces_gold() {
        let msgs = corpus(10);
        let backend = MockBackend::new(0.0, 1);
        let report = label_batch(&msgs, &PromptSpec::zero_shot(), &backend, &fast_config(), &LabelCache::in_memory())
            .await
            .unwrap();
        for (m, r) in msgs.iter().zip(&report.results) {
            let v = r.as_ref().unwrap();
            assert_eq!(v.message_id, m.id);
            assert_eq!(Some(v.label), m.gold_label);
        }
    }

    #[tokio::test]
    async fn warm_cache_issues_no_requests() {
        let msgs = corpus(10);
        let cache = LabelCache::in_memory();
        let config = fast_config();
        let first = label_batch(&msgs, &PromptSpec::zero_shot(), &MockBackend::new(0.1, 1), &config, &cache)
            .await
            .unwrap();
        assert_eq!(first.requests, 10);
        let backend = MockBackend::new(0.1, 1);
        let second = label_batch(&msgs, &PromptSpec::zero_shot(), &backend, &config, &cache).await.unwrap();
        assert_eq!(backend.calls(), 0);
        assert_eq!(second.requests, 0);
        assert_eq!(second.cache_hits, 10);
        assert_eq!(first.results, second.results);
    }

    #[tokio::test]
    async fn peak_concurrency_is_bounded() {
        let msgs = corpus(1000);
        let backend = MockBackend::new(0.0, 1).with_delay(Duration::from_micros(200));
        let config = TeacherConfig {
            max_parallel_requests: 8,
            ..fast_config()
        };
        let report = label_batch(&msgs, &PromptSpec::zero_shot(), &backend, &config, &LabelCache::in_memory())
            .await
            .unwrap();
        assert_eq!(report.verdicts().count(), 1000);
        assert!(backend.peak_in_flight() <= 8, "peak {}", backend.peak_in_flight());
        assert!(backend.peak_in_flight() > 1);
    }

    struct Flaky {
        failures_left: Mutex<u32>,
        status: u16,
    }

    #[async_trait]
    impl TeacherBackend for Flaky {
        async fn complete(&self, _m: &Message, _r: &ChatRequest) -> Result<String, TransportError> {
            let mut left = self.failures_left.lock().unwrap();
            if *left > 0 {
                *left -= 1;
                return Err(TransportError::Status {
                    status: self.status,
                    body: "busy".into(),
                });
            }
            Ok("Clinical, fine".into())
        }
    }

    #[tokio::test]
    async fn retries_then_succeeds() {
        let msgs = corpus(1);
        let flaky = Flaky {
            failures_left: Mutex::new(2),
            status: 503,
        };
        let report = label_batch(&msgs, &PromptSpec::zero_shot(), &flaky, &fast_config(), &LabelCache::in_memory())
            .await
            .unwrap();
        assert_eq!(report.requests, 3);
        assert!(report.results[0].is_ok());
    }

    #[tokio::test]
    async fn gives_up_after_max_retries() {
        let msgs = corpus(1);
        let flaky = Flaky {
            failures_left: Mutex::new(100),
            status: 503,
        };
        let report = label_batch(&msgs, &PromptSpec::zero_shot(), &flaky, &fast_config(), &LabelCache::in_memory())
            .await
            .unwrap();
        assert_eq!(report.requests, 4);
        assert!(matches!(
            &report.results[0],
            Err(LabelFailure { kind: FailureKind::Transport { attempts: 4, .. }, .. })
        ));
    }

    #[tokio::test]
    async fn client_errors_are_not_retried() {
        let msgs = corpus(1);
        let flaky = Flaky {
            failures_left: Mutex::new(1),
            status: 400,
        };
        let report = label_batch(&msgs, &PromptSpec::zero_shot(), &flaky, &fast_config(), &LabelCache::in_memory())
            .await
            .unwrap();
        assert_eq!(report.requests, 1);
        assert_eq!(report.failure_rate(), 1.0);
    }

    struct Chatty;

    #[async_trait]
    impl TeacherBackend for Chatty {
        async fn complete(&self, _m: &Message, _r: &ChatRequest) -> Result<String, TransportError> {
            Ok("It depends on the details.".into())
        }
    }

    #[tokio::test]
    async fn parse_failures_are_reported_not_cached() {
        let msgs = corpus(3);
        let cache = LabelCache::in_memory();
        let report = label_batch(&msgs, &PromptSpec::zero_shot(), &Chatty, &fast_config(), &cache)
            .await
            .unwrap();
        assert!(report.failures().all(|f| matches!(f.kind, FailureKind::Parse { .. })));
        assert_eq!(report.failures().count(), 3);
        assert!(cache.is_empty());
    }

    struct FailAfter(usize);

    impl std::io::Write for FailAfter {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            if self.0 == 0 {
                return Err(std::io::Error::other("disk full"));
            }
            self.0 -= 1;
            Ok(buf.len())
        }

        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }

    #[tokio::test]
    async fn cache_failure_aborts_with_partial_results() {
        let msgs = corpus(20);
        let cache = LabelCache::with_sink(Box::new(FailAfter(5)));
        let config = TeacherConfig {
            max_parallel_requests: 1,
            ..fast_config()
        };
        let err = label_batch(&msgs, &PromptSpec::zero_shot(), &MockBackend::new(0.0, 1), &config, &cache)
            .await
            .unwrap_err();
        let BatchError::Cache { partial, .. } = err else { panic!("{err}") };
        assert_eq!(partial.results.len(), 20);
        assert_eq!(partial.verdicts().count(), 6);
        assert!(partial.failures().all(|f| f.kind == FailureKind::Aborted));
        assert_eq!(cache.len(), 5);
    }

    #[test]
    fn backoff_doubles() {
        let b = Duration::from_millis(100);
        assert_eq!(backoff(b, 0), b);
        assert_eq!(backoff(b, 3), Duration::from_millis(800));
        assert_eq!(backoff(b, 40), Duration::from_secs(60));
    }
}
