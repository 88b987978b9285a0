mod support;

use std::collections::HashMap;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use genmine::annotator::{AnnotatorClient, AnnotatorConfig};
use genmine::config::ParseSourceConfig;
use genmine::core::{Scorer, ScorerConfig};
use genmine::http::RetryPolicy;
use genmine::parses::ParseFailure;
use genmine::pipeline;
use genmine::scorer::{score_batches, ExternalScorer, SCORER_URL_ENV};
use genmine::store::{self, RunDir};
use serde_json::{json, Value};

#[derive(Default)]
struct Mock {
    blocks: HashMap<String, String>,
    requests: AtomicUsize,
    /// Requests to answer with 503 before behaving.
    fail_first: usize,
    /// Drop the last item of every reply.
    misalign: bool,
    score: f64,
}

fn fixture_blocks() -> HashMap<String, String> {
    let text = std::fs::read_to_string(support::corpus_dir().join("parses.conllu")).unwrap();
    let mut out = HashMap::new();
    for block in text.split("\n\n").filter(|b| !b.trim().is_empty()) {
        let sentence = block
            .lines()
            .find_map(|l| l.strip_prefix("# text = "))
            .unwrap()
            .to_string();
        let body: String = block
            .lines()
            .filter(|l| !l.starts_with("# doc_id") && !l.starts_with("# sent_index"))
            .map(|l| format!("{l}\n"))
            .collect();
        out.entry(sentence).or_insert(body);
    }
    out
}

fn texts_of(body: &Value) -> Vec<String> {
    body["texts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t.as_str().unwrap().to_string())
        .collect()
}

async fn parse(
    State(m): State<Arc<Mock>>,
    Json(body): Json<Value>,
) -> Result<Json<Value>, StatusCode> {
    if m.requests.fetch_add(1, Ordering::SeqCst) < m.fail_first {
        return Err(StatusCode::SERVICE_UNAVAILABLE);
    }
    let mut blocks: Vec<String> = texts_of(&body)
        .iter()
        .map(|t| m.blocks.get(t).cloned().unwrap_or_default())
        .collect();
    if m.misalign {
        blocks.pop();
    }
    Ok(Json(json!({ "conllu": blocks })))
}

async fn score(
    State(m): State<Arc<Mock>>,
    Json(body): Json<Value>,
) -> Result<Json<Value>, StatusCode> {
    if m.requests.fetch_add(1, Ordering::SeqCst) < m.fail_first {
        return Err(StatusCode::SERVICE_UNAVAILABLE);
    }
    let mut scores = vec![m.score; texts_of(&body).len()];
    if m.misalign {
        scores.pop();
    }
    Ok(Json(json!({ "scores": scores })))
}

fn serve(mock: Mock) -> (String, Arc<Mock>) {
    let mock = Arc::new(mock);
    let router = Router::new()
        .route("/parse", post(parse))
        .route("/score", post(score))
        .with_state(mock.clone());
    (support::spawn_server(router), mock)
}

fn fast_retry(max_retries: u32) -> RetryPolicy {
    RetryPolicy {
        max_retries,
        base_delay_ms: 1,
        max_delay_ms: 5,
    }
}

fn annotator(url: &str, retries: u32) -> AnnotatorClient {
    let mut cfg = AnnotatorConfig::new(url);
    cfg.retry = fast_retry(retries);
    cfg.batch_size = 4;
    AnnotatorClient::new(cfg)
}

#[test]
fn service_parses_give_the_same_run_as_parse_files() {
    let (url, mock) = serve(Mock {
        blocks: fixture_blocks(),
        ..Mock::default()
    });
    let dir = tempfile::tempdir().unwrap();
    let files = pipeline::mine(&support::fixture_config(&dir.path().join("files"), 2)).unwrap();
    let mut cfg = support::fixture_config(&dir.path().join("service"), 4);
    let mut acfg = AnnotatorConfig::new(url);
    acfg.retry = fast_retry(0);
    cfg.parses = ParseSourceConfig::Service(acfg);
    let service = pipeline::mine(&cfg).unwrap();
    for name in [store::RECORDS, store::COUNTS_TXT, store::PARSES] {
        let a = std::fs::read(files.run_dir.join(name)).unwrap();
        let b = std::fs::read(service.run_dir.join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
    assert!(mock.requests.load(Ordering::SeqCst) > 0);
}

#[test]
fn repeated_texts_are_served_from_the_cache() {
    let (url, mock) = serve(Mock {
        blocks: fixture_blocks(),
        ..Mock::default()
    });
    let client = annotator(&url, 0);
    let texts = [
        "Tigers have stripes.",
        "Birds fly.",
        "Tigers have stripes.",
        "Words have power.",
    ];
    let first = client.blocks(&texts);
    assert!(first.iter().all(Result::is_ok));
    assert_eq!(first[0].as_ref().unwrap(), first[2].as_ref().unwrap());
    assert_eq!(client.service_calls(), 1);
    let again = client.blocks(&texts);
    assert_eq!(client.service_calls(), 1);
    assert_eq!(mock.requests.load(Ordering::SeqCst), 1);
    for (a, b) in first.iter().zip(&again) {
        assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
    }
}

#[test]
fn invalid_blocks_are_reported_and_not_cached() {
    let (url, mock) = serve(Mock::default());
    let client = annotator(&url, 0);
    let r = client.blocks(&["Nobody parsed this."]);
    assert!(matches!(r[0], Err(ParseFailure::Invalid(_))));
    client.blocks(&["Nobody parsed this."]);
    assert_eq!(mock.requests.load(Ordering::SeqCst), 2);
}

#[test]
fn transient_failures_are_retried() {
    let (url, mock) = serve(Mock {
        blocks: fixture_blocks(),
        fail_first: 2,
        ..Mock::default()
    });
    let client = annotator(&url, 3);
    let r = client.blocks(&["Birds fly."]);
    assert!(r[0].is_ok());
    assert_eq!(client.service_calls(), 3);
    assert_eq!(mock.requests.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_run_out() {
    let (url, _) = serve(Mock {
        fail_first: usize::MAX,
        ..Mock::default()
    });
    let client = annotator(&url, 2);
    let r = client.blocks(&["Birds fly."]);
    assert!(matches!(&r[0], Err(ParseFailure::Service(m)) if m.contains("503")));
    assert_eq!(client.service_calls(), 3);
}

#[test]
fn misaligned_replies_fail_without_retry() {
    let (url, _) = serve(Mock {
        blocks: fixture_blocks(),
        misalign: true,
        ..Mock::default()
    });
    let client = annotator(&url, 3);
    let r = client.blocks(&["Birds fly.", "Tigers have stripes."]);
    assert!(r.iter().all(|b| matches!(b, Err(ParseFailure::Service(_)))));
    assert_eq!(client.service_calls(), 1);
}

#[test]
fn unreachable_parser_is_tallied_per_sentence() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = support::fixture_config(&dir.path().join("run"), 2);
    let mut acfg = AnnotatorConfig::new(support::dead_url());
    acfg.retry = fast_retry(1);
    cfg.parses = ParseSourceConfig::Service(acfg);
    let summary = pipeline::mine(&cfg).unwrap();
    assert_eq!(summary.manifest.tallies.get("annotation-service"), 103);
    assert_eq!(summary.manifest.accepted, 0);
}

#[test]
fn external_scorer_scores_in_order() {
    let (url, mock) = serve(Mock {
        score: 0.9,
        ..Mock::default()
    });
    let scorer = ExternalScorer::new(&url, fast_retry(0), std::time::Duration::from_secs(5));
    let texts: Vec<String> = (0..10).map(|i| format!("Text {i}.")).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let batches = score_batches(&refs, &scorer, 3, 2);
    assert_eq!(batches.len(), 4);
    let scores: Vec<f64> = batches
        .into_iter()
        .flat_map(|b| b.unwrap())
        .map(|s| s.value)
        .collect();
    assert_eq!(scores, vec![0.9; 10]);
    assert_eq!(scorer.service_calls(), 4);
    assert_eq!(mock.requests.load(Ordering::SeqCst), 4);
    assert!(scorer.id().starts_with("external:"));
}

#[test]
fn external_scorer_drives_the_pipeline() {
    let (url, _) = serve(Mock {
        score: 0.85,
        ..Mock::default()
    });
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = support::fixture_config(&dir.path().join("run"), 2);
    cfg.scorer = ScorerConfig::external(url);
    cfg.emit_candidates = true;
    let summary = pipeline::mine(&cfg).unwrap();
    let run = RunDir::new(&summary.run_dir);
    let records = run.read_records(store::RECORDS).unwrap();
    assert_eq!(
        records.len(),
        run.read_records(store::CANDIDATES).unwrap().len()
    );
    assert!(records
        .iter()
        .all(|r| r.score.value == 0.85 && r.score.scorer_id.starts_with("external:")));
}

#[test]
fn misaligned_scores_fail_the_batch() {
    let (url, _) = serve(Mock {
        score: 0.9,
        misalign: true,
        ..Mock::default()
    });
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = support::fixture_config(&dir.path().join("run"), 1);
    cfg.scorer = ScorerConfig::external(url);
    let summary = pipeline::mine(&cfg).unwrap();
    assert_eq!(summary.manifest.accepted, 0);
    assert_eq!(summary.manifest.tallies.get("score-error"), 76);
}

#[test]
fn scorer_url_from_environment() {
    let (url, mock) = serve(Mock {
        score: 0.99,
        ..Mock::default()
    });
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_genmine"));
    cmd.env(SCORER_URL_ENV, &url)
        .arg("mine")
        .arg("--out")
        .arg(&out);
    for s in support::SOURCES {
        cmd.arg("--input").arg(format!(
            "{s}={}",
            support::corpus_dir().join(format!("{s}.jsonl")).display()
        ));
    }
    cmd.arg("--parses")
        .arg(support::corpus_dir().join("parses.conllu"));
    let o = cmd.output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains(&format!("scored by {url}")));
    assert!(mock.requests.load(Ordering::SeqCst) > 0);
    let records = RunDir::new(&out).read_records(store::RECORDS).unwrap();
    assert_eq!(records.len(), 76);
}
