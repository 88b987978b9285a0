//! Run directory layout and writers.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use genmine_core::{CountsTable, Document, MGenRecord};
use serde::Serialize;
use thiserror::Error;

use crate::error::{Error, Result};

pub const RECORDS: &str = "records.jsonl";
pub const CANDIDATES: &str = "candidates.jsonl";
pub const COUNTS_JSON: &str = "counts.json";
pub const COUNTS_TXT: &str = "counts.txt";
pub const PARSES: &str = "parses.conllu";
pub const MANIFEST: &str = "manifest.json";
pub const DOCUMENTS: &str = "documents";
pub const STATS: &str = "stats";
pub const LABELS: &str = "labels.jsonl";

/// Paths inside one run directory.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let dir = Self::new(root);
        fs::create_dir_all(dir.root.join(DOCUMENTS)).map_err(|e| Error::io(&dir.root, e))?;
        Ok(dir)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn document_path(&self, doc_id: &str) -> PathBuf {
        self.root
            .join(DOCUMENTS)
            .join(format!("{}.txt", encode_file_name(doc_id)))
    }

    pub fn write_document(&self, doc: &Document) -> Result<()> {
        let path = self.document_path(doc.doc_id());
        fs::write(&path, doc.text()).map_err(|e| Error::io(path, e))
    }

    pub fn read_document(&self, doc_id: &str) -> Result<String> {
        let path = self.document_path(doc_id);
        fs::read_to_string(&path).map_err(|e| Error::io(path, e))
    }

    pub fn write_counts(&self, counts: &CountsTable) -> Result<()> {
        write_json(&self.path(COUNTS_JSON), counts)?;
        let path = self.path(COUNTS_TXT);
        fs::write(&path, counts.render()).map_err(|e| Error::io(path, e))
    }

    pub fn read_records(&self, name: &str) -> Result<Vec<MGenRecord>> {
        read_jsonl(&self.path(name))
    }
}

/// Maps a document id to a file name. Characters outside `[A-Za-z0-9_-]`
/// are percent-encoded byte by byte, so distinct ids never collide.
pub fn encode_file_name(doc_id: &str) -> String {
    let mut out = String::with_capacity(doc_id.len());
    for b in doc_id.bytes() {
        if b.is_ascii_alphanumeric() || b == b'_' || b == b'-' {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: format!("line {i}: {e}"),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("record {record_id} has score {score} below the threshold {threshold}")]
    BelowThreshold {
        record_id: String,
        score: f64,
        threshold: f64,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Newline-delimited JSON record writer. With a threshold set it acts as
/// the accepted sink and refuses records scoring below it.
pub struct RecordSink<W: Write> {
    out: W,
    threshold: Option<f64>,
    written: usize,
}

impl<W: Write> RecordSink<W> {
    pub fn accepted(out: W, threshold: f64) -> Self {
        Self {
            out,
            threshold: Some(threshold),
            written: 0,
        }
    }

    pub fn unfiltered(out: W) -> Self {
        Self {
            out,
            threshold: None,
            written: 0,
        }
    }

    pub fn emit(&mut self, record: &MGenRecord) -> Result<(), EmitError> {
        if let Some(threshold) = self.threshold {
            if record.score.value < threshold {
                return Err(EmitError::BelowThreshold {
                    record_id: record.record_id.clone(),
                    score: record.score.value,
                    threshold,
                });
            }
        }
        serde_json::to_writer(&mut self.out, record).map_err(std::io::Error::from)?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}
