//! Source-tagged documents and sentence segmentation.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::convert::Infallible;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The corpus a document was drawn from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceTag {
    RefinedWeb,
    SlimPajama,
    Pile,
    Pes2o,
    Arxiv,
    Other(String),
}

impl SourceTag {
    pub fn as_str(&self) -> &str {
        match self {
            SourceTag::RefinedWeb => "refinedweb",
            SourceTag::SlimPajama => "slimpajama",
            SourceTag::Pile => "pile",
            SourceTag::Pes2o => "pes2o",
            SourceTag::Arxiv => "arxiv",
            SourceTag::Other(name) => name,
        }
    }

    /// Web crawls as opposed to academic publications.
    pub fn is_web(&self) -> bool {
        matches!(
            self,
            SourceTag::RefinedWeb | SourceTag::SlimPajama | SourceTag::Pile
        )
    }
}

impl FromStr for SourceTag {
    type Err = Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_lowercase();
        Ok(match lower.as_str() {
            "refinedweb" => SourceTag::RefinedWeb,
            "slimpajama" => SourceTag::SlimPajama,
            "pile" | "the-pile" | "thepile" => SourceTag::Pile,
            "pes2o" => SourceTag::Pes2o,
            "arxiv" => SourceTag::Arxiv,
            _ => SourceTag::Other(s.trim().to_string()),
        })
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for SourceTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for SourceTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(s.parse().unwrap_or_else(|e: Infallible| match e {}))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("document id must not be empty")]
pub struct EmptyDocId;

/// One corpus document. The text is kept exactly as read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    doc_id: String,
    source: SourceTag,
    text: String,
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        source: SourceTag,
        text: impl Into<String>,
    ) -> Result<Self, EmptyDocId> {
        let doc_id = doc_id.into();
        if doc_id.is_empty() {
            return Err(EmptyDocId);
        }
        Ok(Document {
            doc_id,
            source,
            text: text.into(),
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn source(&self) -> &SourceTag {
        &self.source
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// A sentence located inside a document.
///
/// `char_start` and `char_end` count Unicode scalar values, not bytes, so the
/// offsets agree with string indexing in most other languages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub doc_id: String,
    pub sent_index: u32,
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
}

/// Returns the substring of `text` between two character offsets.
pub fn char_slice(text: &str, char_start: usize, char_end: usize) -> Option<&str> {
    if char_start > char_end {
        return None;
    }
    let mut indices = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(core::iter::once(text.len()));
    let start = indices.nth(char_start)?;
    let end = if char_end == char_start {
        start
    } else {
        indices.nth(char_end - char_start - 1)?
    };
    Some(&text[start..end])
}

/// Splits a document into sentences.
pub trait Segmenter {
    fn segment(&self, doc: &Document) -> Vec<SentenceSpan>;
}

const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "al.", "approx.", "cf.", "co.", "dr.", "e.g.", "eq.", "eqs.", "etc.", "fig.", "figs.", "i.e.",
    "inc.", "jr.", "ltd.", "mr.", "mrs.", "ms.", "no.", "nos.", "p.", "pp.", "prof.", "ref.",
    "refs.", "sec.", "sr.", "st.", "vol.", "vs.",
];

/// Deterministic punctuation-driven segmenter.
///
/// A sentence ends after `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets) when the next non-space character is an uppercase
/// letter or a digit, or when only whitespace remains. A blank line (`\n\n`)
/// always ends a sentence. A period closing a known abbreviation never does.
#[derive(Debug, Clone)]
pub struct RuleSegmenter {
    abbreviations: BTreeSet<String>,
}

impl Default for RuleSegmenter {
    fn default() -> Self {
        RuleSegmenter::with_abbreviations(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

fn is_closing(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}' | '\u{bb}'
    )
}

fn is_opening(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | '(' | '[' | '{' | '\u{201c}' | '\u{2018}' | '\u{ab}'
    )
}

impl RuleSegmenter {
    /// Builds a segmenter with a custom abbreviation list. Entries are matched
    /// case-insensitively and should include their trailing period.
    pub fn with_abbreviations<'a>(entries: impl IntoIterator<Item = &'a str>) -> Self {
        RuleSegmenter {
            abbreviations: entries.into_iter().map(|a| a.to_lowercase()).collect(),
        }
    }

    fn ends_abbreviation(&self, chars: &[(usize, char)], period: usize) -> bool {
        let mut start = period;
        while start > 0 && !chars[start - 1].1.is_whitespace() {
            start -= 1;
        }
        while start < period && is_opening(chars[start].1) {
            start += 1;
        }
        let word: String = chars[start..=period]
            .iter()
            .flat_map(|&(_, c)| c.to_lowercase())
            .collect();
        self.abbreviations.contains(&word)
    }

    /// Character offsets at which sentences end (exclusive).
    fn boundaries(&self, chars: &[(usize, char)]) -> Vec<usize> {
        let n = chars.len();
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            let c = chars[i].1;
            if c == '\n' && i + 1 < n && chars[i + 1].1 == '\n' {
                out.push(i);
                i += 2;
                continue;
            }
            if matches!(c, '.' | '!' | '?') {
                let mut k = i + 1;
                while k < n && is_closing(chars[k].1) {
                    k += 1;
                }
                let split = if k == n {
                    true
                } else if chars[k].1.is_whitespace() {
                    let mut m = k;
                    while m < n && chars[m].1.is_whitespace() {
                        m += 1;
                    }
                    m == n || chars[m].1.is_uppercase() || chars[m].1.is_ascii_digit()
                } else {
                    false
                };
                if split && !(c == '.' && self.ends_abbreviation(chars, i)) {
                    out.push(k);
                    i = k;
                    continue;
                }
            }
            i += 1;
        }
        out
    }

    /// Segments raw text; `doc_id` is copied into every span.
    pub fn segment_text(&self, doc_id: &str, text: &str) -> Vec<SentenceSpan> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let n = chars.len();
        let byte_at = |ci: usize| if ci == n { text.len() } else { chars[ci].0 };

        let mut spans = Vec::new();
        let mut from = 0;
        let mut ends = self.boundaries(&chars);
        ends.push(n);
        for end in ends {
            let mut s = from;
            let mut e = end;
            while s < e && chars[s].1.is_whitespace() {
                s += 1;
            }
            while e > s && chars[e - 1].1.is_whitespace() {
                e -= 1;
            }
            if s < e {
                spans.push(SentenceSpan {
                    doc_id: doc_id.to_string(),
                    sent_index: spans.len() as u32,
                    char_start: s,
                    char_end: e,
                    text: text[byte_at(s)..byte_at(e)].to_string(),
                });
            }
            from = end;
        }
        spans
    }
}

impl Segmenter for RuleSegmenter {
    fn segment(&self, doc: &Document) -> Vec<SentenceSpan> {
        self.segment_text(doc.doc_id(), doc.text())
    }
}
