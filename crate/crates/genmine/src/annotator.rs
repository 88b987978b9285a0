//! Client for the external annotation (parsing) service.
//!
//! Wire protocol: `POST /parse` with `{"texts": [...]}`, reply
//! `{"conllu": [...]}` with one CoNLL-U block per text, aligned by index.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use genmine_core::conllu::parse_block_text;
use genmine_core::{ParsedSentence, SentenceSpan, SpanRef};
use lru::LruCache;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::http::{agent, join_url, post_json, with_retry, Attempt, Gate, RetryPolicy};
use crate::parses::{ParseFailure, ParseSource};

pub const DEFAULT_CACHE_ENTRIES: usize = 1_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatorConfig {
    pub endpoint: String,
    pub retry: RetryPolicy,
    pub cache_entries: usize,
    pub max_in_flight: usize,
    pub batch_size: usize,
    pub timeout_ms: u64,
}

impl AnnotatorConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            retry: RetryPolicy::default(),
            cache_entries: DEFAULT_CACHE_ENTRIES,
            max_in_flight: 8,
            batch_size: 64,
            timeout_ms: 30_000,
        }
    }
}

#[derive(Serialize)]
struct ParseRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct ParseResponse {
    conllu: Vec<String>,
}

type Key = [u8; 32];

pub struct AnnotatorClient {
    agent: ureq::Agent,
    url: String,
    config: AnnotatorConfig,
    cache: Mutex<LruCache<Key, Arc<str>>>,
    gate: Gate,
    calls: AtomicU64,
}

impl AnnotatorClient {
    pub fn new(config: AnnotatorConfig) -> Self {
        let cap = NonZeroUsize::new(config.cache_entries).unwrap_or(NonZeroUsize::MIN);
        Self {
            agent: agent(Duration::from_millis(config.timeout_ms)),
            url: join_url(&config.endpoint, "parse"),
            gate: Gate::new(config.max_in_flight),
            cache: Mutex::new(LruCache::new(cap)),
            calls: AtomicU64::new(0),
            config,
        }
    }

    /// HTTP requests made so far, retries included.
    pub fn service_calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn annotate(&self, span: &SentenceSpan) -> Result<ParsedSentence, ParseFailure> {
        self.parse_spans(std::slice::from_ref(span))
            .pop()
            .unwrap_or(Err(ParseFailure::Missing))
    }

    /// CoNLL-U blocks for `texts`, from the cache where possible. Only blocks
    /// that validate are cached.
    pub fn blocks(&self, texts: &[&str]) -> Vec<Result<Arc<str>, ParseFailure>> {
        let keys: Vec<Key> = texts
            .iter()
            .map(|t| Sha256::digest(t.as_bytes()).into())
            .collect();
        let mut out: Vec<Option<Result<Arc<str>, ParseFailure>>> = {
            let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
            keys.iter().map(|k| cache.get(k).cloned().map(Ok)).collect()
        };
        // One request slot per distinct missing text.
        let mut pending: HashMap<Key, Vec<usize>> = HashMap::new();
        let mut order = Vec::new();
        for (i, slot) in out.iter().enumerate() {
            if slot.is_none() {
                let waiting = pending.entry(keys[i]).or_default();
                if waiting.is_empty() {
                    order.push(i);
                }
                waiting.push(i);
            }
        }
        for chunk in order.chunks(self.config.batch_size.max(1)) {
            let batch: Vec<&str> = chunk.iter().map(|&i| texts[i]).collect();
            let replies = self.request(&batch);
            for (&i, reply) in chunk.iter().zip(replies) {
                let reply = reply.and_then(|block| {
                    parse_block_text(&block, &SpanRef::new("", 0))
                        .map_err(ParseFailure::Invalid)?;
                    let block: Arc<str> = block.into();
                    self.cache
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .put(keys[i], block.clone());
                    Ok(block)
                });
                for &j in &pending[&keys[i]] {
                    out[j] = Some(reply.clone());
                }
            }
        }
        out.into_iter()
            .map(|r| r.unwrap_or(Err(ParseFailure::Missing)))
            .collect()
    }

    fn request(&self, texts: &[&str]) -> Vec<Result<String, ParseFailure>> {
        let _permit = self.gate.enter();
        let body = ParseRequest { texts };
        let reply: Result<ParseResponse, String> = with_retry(&self.config.retry, || {
            self.calls.fetch_add(1, Ordering::Relaxed);
            let r: ParseResponse = post_json(&self.agent, &self.url, &body)?;
            if r.conllu.len() != texts.len() {
                return Err(Attempt::Fatal(format!(
                    "sent {} texts, received {} parses",
                    texts.len(),
                    r.conllu.len()
                )));
            }
            Ok(r)
        });
        match reply {
            Ok(r) => r.conllu.into_iter().map(Ok).collect(),
            Err(msg) => texts
                .iter()
                .map(|_| Err(ParseFailure::Service(msg.clone())))
                .collect(),
        }
    }
}

impl ParseSource for AnnotatorClient {
    fn parse_spans(&self, spans: &[SentenceSpan]) -> Vec<Result<ParsedSentence, ParseFailure>> {
        let texts: Vec<&str> = spans.iter().map(|s| s.text.as_str()).collect();
        self.blocks(&texts)
            .into_iter()
            .zip(spans)
            .map(|(block, span)| {
                let span_ref = SpanRef::new(span.doc_id.as_str(), span.sent_index);
                parse_block_text(&block?, &span_ref).map_err(ParseFailure::Invalid)
            })
            .collect()
    }
}
