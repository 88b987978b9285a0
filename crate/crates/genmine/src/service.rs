//! HTTP service for human genericity labeling.
//!
//! Labels go to an append-only log in the run directory; the in-memory
//! state is rebuilt from that log on start.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{SecondsFormat, Utc};
use genmine_core::agreement::{agreement, sample_batch};
use genmine_core::document::char_slice;
use genmine_core::{AgreementReport, Judgment, LabelBook, LabelKind, MGenRecord};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{self, RunDir};

pub const EXCERPT_CHARS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchItem {
    pub record_id: String,
    pub sentence: String,
    pub context_excerpt: String,
}

/// A batch item as shown to one annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorItem {
    #[serde(flatten)]
    pub item: BatchItem,
    pub label: Option<LabelKind>,
}

/// One line of the label log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub record_id: String,
    pub annotator_id: String,
    pub label: LabelKind,
    pub timestamp: String,
    /// Set when this entry replaced the annotator's earlier label.
    pub overwrite: bool,
}

#[derive(Debug, Deserialize)]
pub struct LabelRequest {
    pub record_id: String,
    pub annotator_id: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAck {
    pub overwrite: bool,
}

#[derive(Debug, PartialEq, Eq)]
pub enum LabelError {
    UnknownRecord(String),
    BadRequest(String),
    Log(String),
}

impl LabelError {
    pub fn status(&self) -> StatusCode {
        match self {
            LabelError::UnknownRecord(_) => StatusCode::NOT_FOUND,
            LabelError::BadRequest(_) => StatusCode::BAD_REQUEST,
            LabelError::Log(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn message(&self) -> String {
        match self {
            LabelError::UnknownRecord(id) => format!("record {id:?} is not in the active batch"),
            LabelError::BadRequest(m) | LabelError::Log(m) => m.clone(),
        }
    }
}

impl IntoResponse for LabelError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message() });
        (self.status(), Json(body)).into_response()
    }
}

struct Inner {
    book: LabelBook,
    log: File,
}

/// Active batch plus label state. Writes are serialized by the mutex.
pub struct Annotation {
    batch: Vec<BatchItem>,
    index: HashMap<String, usize>,
    log_path: PathBuf,
    inner: Mutex<Inner>,
    ui: Option<String>,
}

impl Annotation {
    /// Samples `n` records of the run with `seed` and replays the label log.
    pub fn open(run_dir: &Path, n: usize, seed: u64) -> Result<Self> {
        let run = RunDir::new(run_dir);
        let records = run.read_records(store::RECORDS)?;
        let ids: Vec<&str> = records.iter().map(|r| r.record_id.as_str()).collect();
        let chosen = sample_batch(&ids, n, seed).map_err(|e| Error::stage("sample", e))?;
        let by_id: HashMap<&str, &MGenRecord> =
            records.iter().map(|r| (r.record_id.as_str(), r)).collect();
        let batch = chosen
            .iter()
            .map(|id| {
                let r = by_id[id.as_str()];
                BatchItem {
                    record_id: r.record_id.clone(),
                    sentence: r.sentence.clone(),
                    context_excerpt: excerpt(&run, r),
                }
            })
            .collect();
        Self::with_batch(batch, run.path(store::LABELS))
    }

    pub fn with_batch(batch: Vec<BatchItem>, log_path: PathBuf) -> Result<Self> {
        let index = batch
            .iter()
            .enumerate()
            .map(|(i, b)| (b.record_id.clone(), i))
            .collect();
        let book = replay(&log_path)?;
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| Error::io(&log_path, e))?;
        Ok(Self {
            batch,
            index,
            log_path,
            inner: Mutex::new(Inner { book, log }),
            ui: None,
        })
    }

    /// Serves `html` at `/` instead of the built-in page.
    pub fn with_ui(mut self, html: String) -> Self {
        self.ui = Some(html);
        self
    }

    pub fn batch(&self) -> &[BatchItem] {
        &self.batch
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    pub fn items_for(&self, annotator: &str) -> Vec<AnnotatorItem> {
        let inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        self.batch
            .iter()
            .map(|b| AnnotatorItem {
                item: b.clone(),
                label: inner.book.get(&b.record_id, annotator),
            })
            .collect()
    }

    pub fn record_label(&self, req: &LabelRequest) -> Result<LabelAck, LabelError> {
        let label: LabelKind =
            req.label
                .parse()
                .map_err(|e: genmine_core::agreement::UnknownLabelKind| {
                    LabelError::BadRequest(e.to_string())
                })?;
        if req.annotator_id.trim().is_empty() {
            return Err(LabelError::BadRequest("annotator_id is empty".into()));
        }
        if !self.index.contains_key(&req.record_id) {
            return Err(LabelError::UnknownRecord(req.record_id.clone()));
        }
        let judgment = Judgment {
            record_id: req.record_id.clone(),
            annotator_id: req.annotator_id.clone(),
            label,
        };
        let mut inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        let overwrite = inner
            .book
            .get(&judgment.record_id, &judgment.annotator_id)
            .is_some();
        let entry = LogEntry {
            record_id: judgment.record_id.clone(),
            annotator_id: judgment.annotator_id.clone(),
            label,
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            overwrite,
        };
        let mut line = serde_json::to_string(&entry).map_err(|e| LabelError::Log(e.to_string()))?;
        line.push('\n');
        inner
            .log
            .write_all(line.as_bytes())
            .and_then(|_| inner.log.flush())
            .map_err(|e| LabelError::Log(e.to_string()))?;
        inner.book.submit(&judgment);
        Ok(LabelAck { overwrite })
    }

    pub fn report(&self) -> AgreementReport {
        let inner = self.inner.lock().unwrap_or_else(|e| e.into_inner());
        agreement(&inner.book)
    }
}

fn excerpt(run: &RunDir, r: &MGenRecord) -> String {
    let text = match &r.context {
        Some(c) => c.clone(),
        None => run.read_document(&r.doc_id).unwrap_or_default(),
    };
    let end = text.chars().count().min(EXCERPT_CHARS);
    char_slice(&text, 0, end).unwrap_or_default().to_string()
}

/// Rebuilds the label book from a log. A missing log is an empty book.
pub fn replay(path: &Path) -> Result<LabelBook> {
    let mut book = LabelBook::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(book),
        Err(e) => return Err(Error::io(path, e)),
    };
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: LogEntry = serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("label log line {i}: {e}"),
        })?;
        book.submit(&Judgment {
            record_id: entry.record_id,
            annotator_id: entry.annotator_id,
            label: entry.label,
        });
    }
    Ok(book)
}

#[derive(Deserialize)]
struct BatchQuery {
    annotator: Option<String>,
}

async fn get_batch(State(s): State<Arc<Annotation>>, Query(q): Query<BatchQuery>) -> Response {
    match q.annotator.filter(|a| !a.trim().is_empty()) {
        Some(a) => Json(s.items_for(&a)).into_response(),
        None => {
            LabelError::BadRequest("annotator query parameter is required".into()).into_response()
        }
    }
}

async fn post_label(
    State(s): State<Arc<Annotation>>,
    body: Result<Json<LabelRequest>, JsonRejection>,
) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return LabelError::BadRequest(e.body_text()).into_response(),
    };
    match s.record_label(&req) {
        Ok(ack) => Json(ack).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn get_report(State(s): State<Arc<Annotation>>) -> Json<AgreementReport> {
    Json(s.report())
}

async fn index(State(s): State<Arc<Annotation>>) -> Html<String> {
    Html(s.ui.clone().unwrap_or_else(|| INDEX.to_string()))
}

const INDEX: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>genmine annotation</title></head>
<body>
<h1>genmine annotation service</h1>
<ul>
<li>GET /api/batch?annotator=ID</li>
<li>POST /api/label {\"record_id\", \"annotator_id\", \"label\": Generic | Particular | Unclear}</li>
<li>GET /api/report</li>
</ul>
</body></html>
";

pub fn router(state: Arc<Annotation>) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/api/batch", get(get_batch))
        .route("/api/label", post(post_label))
        .route("/api/report", get(get_report))
        .with_state(state)
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(state: Arc<Annotation>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::Config(format!("cannot bind {addr}: {e}")))?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::stage("annotate-serve", e))
}
