//! Where dependency parses come from: pre-parsed CoNLL-U files or the
//! annotation service.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use genmine_core::conllu::{read_blocks, BlockError, BlockErrorKind, ReadOptions};
use genmine_core::{ParsedSentence, SentenceSpan, SpanRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Why a sentence has no usable parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseFailure {
    Missing,
    TextMismatch,
    Invalid(BlockErrorKind),
    Service(String),
}

impl ParseFailure {
    /// Tally key.
    pub fn kind(&self) -> &'static str {
        match self {
            ParseFailure::Missing => "missing-parse",
            ParseFailure::TextMismatch => "parse-text-mismatch",
            ParseFailure::Invalid(_) => "invalid-parse",
            ParseFailure::Service(_) => "annotation-service",
        }
    }
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseFailure::Missing => f.write_str("no parse for sentence"),
            ParseFailure::TextMismatch => f.write_str("parse text differs from the sentence"),
            ParseFailure::Invalid(kind) => write!(f, "invalid parse: {kind}"),
            ParseFailure::Service(msg) => write!(f, "annotation service: {msg}"),
        }
    }
}

/// Supplies parses for the sentences of one document, in span order.
pub trait ParseSource: Sync {
    fn parse_spans(&self, spans: &[SentenceSpan]) -> Vec<Result<ParsedSentence, ParseFailure>>;
}

/// Result of reading a CoNLL-U file: good blocks plus the rejected ones.
#[derive(Debug, Default)]
pub struct ParseFile {
    pub sentences: Vec<ParsedSentence>,
    pub errors: Vec<BlockError>,
}

/// Reads every block of a CoNLL-U file. Bad blocks are skipped and reported;
/// an unreadable file is fatal.
pub fn read_parses(path: &Path) -> Result<ParseFile> {
    let input = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_conllu(&input))
}

pub fn parse_conllu(input: &str) -> ParseFile {
    let mut out = ParseFile::default();
    for block in read_blocks(input, ReadOptions::default()) {
        match block {
            Ok(s) => out.sentences.push(s),
            Err(e) => out.errors.push(e),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexStats {
    pub blocks: usize,
    pub duplicates: usize,
}

/// Parses keyed by (doc_id, sent_index).
#[derive(Debug, Default)]
pub struct ParseIndex {
    by_ref: HashMap<SpanRef, ParsedSentence>,
    stats: IndexStats,
}

impl ParseIndex {
    /// Indexes the sentences; a repeated reference keeps the first block.
    pub fn new(sentences: impl IntoIterator<Item = ParsedSentence>) -> Self {
        let mut index = ParseIndex::default();
        for s in sentences {
            index.stats.blocks += 1;
            if index.by_ref.contains_key(&s.span_ref) {
                index.stats.duplicates += 1;
            } else {
                index.by_ref.insert(s.span_ref.clone(), s);
            }
        }
        index
    }

    pub fn get(&self, span_ref: &SpanRef) -> Option<&ParsedSentence> {
        self.by_ref.get(span_ref)
    }

    pub fn len(&self) -> usize {
        self.by_ref.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_ref.is_empty()
    }

    pub fn stats(&self) -> IndexStats {
        self.stats
    }

    pub fn lookup(&self, span: &SentenceSpan) -> Result<ParsedSentence, ParseFailure> {
        let key = SpanRef::new(span.doc_id.as_str(), span.sent_index);
        let parsed = self.by_ref.get(&key).ok_or(ParseFailure::Missing)?;
        match &parsed.text {
            Some(text) if text != &span.text => Err(ParseFailure::TextMismatch),
            _ => Ok(parsed.clone()),
        }
    }
}

impl ParseSource for ParseIndex {
    fn parse_spans(&self, spans: &[SentenceSpan]) -> Vec<Result<ParsedSentence, ParseFailure>> {
        spans.iter().map(|s| self.lookup(s)).collect()
    }
}
