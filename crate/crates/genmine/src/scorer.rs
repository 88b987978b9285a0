//! Genericity scorers: the built-in heuristic and a client for an external
//! scoring service.
//!
//! Wire protocol: `POST /score` with `{"texts": [...]}`, reply
//! `{"scores": [...]}` aligned by index.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use genmine_core::scoring::{checked_batch, ScoreError, ScorerKind};
use genmine_core::{GenericityScore, HeuristicScorer, Scorer, ScorerConfig};
use serde::{Deserialize, Serialize};

use crate::http::{agent, join_url, post_json, with_retry, RetryPolicy};

/// Overrides the configured scorer endpoint.
pub const SCORER_URL_ENV: &str = "GENMINE_SCORER_URL";

#[derive(Serialize)]
struct ScoreRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

pub struct ExternalScorer {
    agent: ureq::Agent,
    url: String,
    id: String,
    retry: RetryPolicy,
    calls: AtomicU64,
}

impl ExternalScorer {
    pub fn new(endpoint: &str, retry: RetryPolicy, timeout: Duration) -> Self {
        Self {
            agent: agent(timeout),
            url: join_url(endpoint, "score"),
            id: format!("external:{endpoint}"),
            retry,
            calls: AtomicU64::new(0),
        }
    }

    pub fn service_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Scorer for ExternalScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<f64>, ScoreError> {
        let body = ScoreRequest { texts };
        with_retry(&self.retry, || {
            self.calls.fetch_add(1, Ordering::Relaxed);
            post_json::<_, ScoreResponse>(&self.agent, &self.url, &body).map(|r| r.scores)
        })
        .map_err(ScoreError::Service)
    }
}

/// Builds the scorer a config asks for.
pub fn build_scorer(cfg: &ScorerConfig, retry: RetryPolicy) -> Box<dyn Scorer + Sync> {
    match (&cfg.kind, &cfg.endpoint) {
        (ScorerKind::ExternalService, Some(endpoint)) => Box::new(ExternalScorer::new(
            endpoint,
            retry,
            Duration::from_secs(60),
        )),
        _ => Box::new(HeuristicScorer::default()),
    }
}

/// Applies the endpoint override from the environment, switching to the
/// external scorer when it is set.
pub fn apply_env_override(cfg: &mut ScorerConfig) {
    if let Ok(url) = std::env::var(SCORER_URL_ENV) {
        if !url.trim().is_empty() {
            cfg.kind = ScorerKind::ExternalService;
            cfg.endpoint = Some(url.trim().to_string());
        }
    }
}

type BatchResult = Result<Vec<GenericityScore>, ScoreError>;

/// Scores `texts` in batches, running up to `max_in_flight` batches at once.
/// Returns one result per batch, in batch order; a failed batch does not
/// affect the others.
pub fn score_batches(
    texts: &[&str],
    scorer: &(dyn Scorer + Sync),
    batch_size: usize,
    max_in_flight: usize,
) -> Vec<BatchResult> {
    let batches: Vec<&[&str]> = texts.chunks(batch_size.max(1)).collect();
    let results: Vec<Mutex<Option<BatchResult>>> =
        batches.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = max_in_flight.clamp(1, batches.len().max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(batch) = batches.get(i) else { break };
                let result = checked_batch(scorer, batch).and_then(|values| {
                    values
                        .into_iter()
                        .enumerate()
                        .map(|(j, v)| {
                            GenericityScore::new(v, scorer.id())
                                .map_err(|_| ScoreError::NonFinite { index: j })
                        })
                        .collect()
                });
                *results[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(result);
            });
        }
    });
    results
        .into_iter()
        .map(|m| {
            m.into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .unwrap_or(Err(ScoreError::Service("batch not run".into())))
        })
        .collect()
}
