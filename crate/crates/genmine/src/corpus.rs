//! Newline-delimited JSON document corpora.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use genmine_core::{Document, SourceTag};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Documents whose text exceeds this many bytes are skipped.
pub const DEFAULT_MAX_DOC_BYTES: usize = 10 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordErrorKind {
    Malformed,
    MissingText,
    EmptyId,
    DuplicateId,
    Oversized,
}

impl RecordErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordErrorKind::Malformed => "malformed",
            RecordErrorKind::MissingText => "missing-text",
            RecordErrorKind::EmptyId => "empty-id",
            RecordErrorKind::DuplicateId => "duplicate-id",
            RecordErrorKind::Oversized => "oversized",
        }
    }
}

impl fmt::Display for RecordErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A skipped input line. Lines are counted from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    pub path: PathBuf,
    pub line: usize,
    pub reason: RecordErrorKind,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LoadOptions {
    pub max_doc_bytes: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            max_doc_bytes: DEFAULT_MAX_DOC_BYTES,
        }
    }
}

#[derive(Debug, Default)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub errors: Vec<RecordError>,
}

/// Reads one document per line. Bad lines become [`RecordError`]s; only an
/// unreadable file is fatal. Blank lines are ignored but still counted.
pub fn load_documents(path: &Path, source: &SourceTag, options: LoadOptions) -> Result<Corpus> {
    let mut loader = Loader::new(options);
    loader.load(path, source)?;
    Ok(loader.finish())
}

/// Loads several files into one corpus, rejecting ids seen in an earlier
/// line or file.
#[derive(Debug, Default)]
pub struct Loader {
    options: LoadOptions,
    seen: HashSet<String>,
    corpus: Corpus,
}

impl Loader {
    pub fn new(options: LoadOptions) -> Self {
        Self {
            options,
            ..Self::default()
        }
    }

    pub fn load(&mut self, path: &Path, source: &SourceTag) -> Result<()> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        read_lines(
            BufReader::new(file),
            path,
            source,
            self.options,
            &mut self.seen,
            &mut self.corpus,
        )
    }

    pub fn finish(self) -> Corpus {
        self.corpus
    }
}

fn read_lines(
    mut reader: impl BufRead,
    path: &Path,
    source: &SourceTag,
    options: LoadOptions,
    seen: &mut HashSet<String>,
    corpus: &mut Corpus,
) -> Result<()> {
    let mut buf = Vec::new();
    let mut line = 0usize;
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        let this_line = line;
        line += 1;
        let raw = match std::str::from_utf8(&buf) {
            Ok(s) => s.trim_end_matches(['\n', '\r']),
            Err(_) => {
                corpus
                    .errors
                    .push(record_error(path, this_line, RecordErrorKind::Malformed));
                continue;
            }
        };
        if raw.trim().is_empty() {
            continue;
        }
        match parse_line(raw, this_line, source, options) {
            Ok(doc) if !seen.insert(doc.doc_id().to_string()) => {
                corpus
                    .errors
                    .push(record_error(path, this_line, RecordErrorKind::DuplicateId))
            }
            Ok(doc) => corpus.documents.push(doc),
            Err(reason) => corpus.errors.push(record_error(path, this_line, reason)),
        }
    }
    Ok(())
}

fn record_error(path: &Path, line: usize, reason: RecordErrorKind) -> RecordError {
    RecordError {
        path: path.to_path_buf(),
        line,
        reason,
    }
}

fn parse_line(
    raw: &str,
    line: usize,
    source: &SourceTag,
    options: LoadOptions,
) -> Result<Document, RecordErrorKind> {
    let value: Value = serde_json::from_str(raw).map_err(|_| RecordErrorKind::Malformed)?;
    let Value::Object(mut obj) = value else {
        return Err(RecordErrorKind::Malformed);
    };
    let Some(Value::String(text)) = obj.remove("text") else {
        return Err(RecordErrorKind::MissingText);
    };
    if text.len() > options.max_doc_bytes {
        return Err(RecordErrorKind::Oversized);
    }
    let doc_id = match obj.remove("id") {
        None | Some(Value::Null) => format!("{source}:{line}"),
        Some(Value::String(s)) => s,
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err(RecordErrorKind::Malformed),
    };
    Document::new(doc_id, source.clone(), text).map_err(|_| RecordErrorKind::EmptyId)
}
