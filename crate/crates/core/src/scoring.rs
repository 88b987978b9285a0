//! Genericity scoring of bare-plural candidates.
//!
//! Scores are unbounded reals; only their order relative to the threshold
//! matters. Acceptance is inclusive: a score equal to the threshold passes.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::filters::Quantifier;
use crate::text::{normalize_word, normalized_words, strip_punct};

/// Default acceptance threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenericityScore {
    pub value: f64,
    pub scorer_id: String,
}

impl GenericityScore {
    pub fn new(value: f64, scorer_id: impl Into<String>) -> Result<Self, ScoreError> {
        if !value.is_finite() {
            return Err(ScoreError::NonFinite { index: 0 });
        }
        Ok(GenericityScore {
            value,
            scorer_id: scorer_id.into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    HeuristicBaseline,
    ExternalService,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub kind: ScorerKind,
    pub endpoint: Option<String>,
    pub threshold: f64,
    pub batch_size: usize,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            kind: ScorerKind::HeuristicBaseline,
            endpoint: None,
            threshold: DEFAULT_THRESHOLD,
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("an external scorer needs an endpoint and only an external scorer may have one")]
    Endpoint,
    #[error("threshold must be a positive finite number")]
    Threshold,
    #[error("batch size must be positive")]
    BatchSize,
}

impl ScorerConfig {
    pub fn external(endpoint: impl Into<String>) -> Self {
        ScorerConfig {
            kind: ScorerKind::ExternalService,
            endpoint: Some(endpoint.into()),
            ..ScorerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if (self.kind == ScorerKind::ExternalService) != self.endpoint.is_some() {
            return Err(ConfigError::Endpoint);
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(ConfigError::Threshold);
        }
        if self.batch_size == 0 {
            return Err(ConfigError::BatchSize);
        }
        Ok(())
    }
}

/// True iff the score reaches the threshold.
pub fn accept(score: &GenericityScore, cfg: &ScorerConfig) -> bool {
    score.value >= cfg.threshold
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("sentence does not start with \"{quantifier}\" followed by whitespace")]
pub struct StripError {
    pub quantifier: Quantifier,
}

/// Removes a leading quantifier word, along with punctuation attached to it
/// ("Generally, ..."). The remainder keeps its casing; the whitespace between
/// the two words is dropped.
pub fn strip_quantifier(text: &str, q: Quantifier) -> Result<String, StripError> {
    let err = StripError { quantifier: q };
    let trimmed = text.trim_start();
    let word_end = trimmed.find(char::is_whitespace).ok_or(err.clone())?;
    if !strip_punct(&trimmed[..word_end]).eq_ignore_ascii_case(q.as_str()) {
        return Err(err);
    }
    let rest = trimmed[word_end..].trim_start();
    if rest.is_empty() {
        return Err(err);
    }
    Ok(rest.to_string())
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("nothing to score")]
    EmptyInput,
    #[error("scorer returned {got} scores for {expected} texts")]
    Misaligned { expected: usize, got: usize },
    #[error("scorer returned a non-finite score at position {index}")]
    NonFinite { index: usize },
    #[error("scoring service failed: {0}")]
    Service(String),
}

/// Anything that maps sentences to genericity scores. Implementations must
/// return exactly one finite score per input, in input order.
pub trait Scorer {
    fn id(&self) -> &str;

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<f64>, ScoreError>;
}

/// Scores `texts` in batches of `batch_size`, checking alignment.
pub fn score(
    texts: &[&str],
    scorer: &dyn Scorer,
    batch_size: usize,
) -> Result<Vec<GenericityScore>, ScoreError> {
    if texts.is_empty() {
        return Err(ScoreError::EmptyInput);
    }
    let mut out = Vec::with_capacity(texts.len());
    for chunk in texts.chunks(batch_size.max(1)) {
        let offset = out.len();
        let values = checked_batch(scorer, chunk)?;
        for (i, value) in values.into_iter().enumerate() {
            out.push(
                GenericityScore::new(value, scorer.id())
                    .map_err(|_| ScoreError::NonFinite { index: offset + i })?,
            );
        }
    }
    Ok(out)
}

/// One batch call with length and finiteness checks.
pub fn checked_batch(scorer: &dyn Scorer, texts: &[&str]) -> Result<Vec<f64>, ScoreError> {
    let values = scorer.score_batch(texts)?;
    if values.len() != texts.len() {
        return Err(ScoreError::Misaligned {
            expected: texts.len(),
            got: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(ScoreError::NonFinite { index });
    }
    Ok(values)
}

const DEFAULT_BLOCKLIST: &str = include_str!("../data/blocklist.txt");
const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// The stopword list shipped with the crate.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_word_list(DEFAULT_STOPWORDS)
}

/// Parses a plain-text list: one entry per line, `#` comments, blank lines
/// ignored, entries lowercased.
pub fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Penalty applied per rule that fires.
pub const PENALTY: f64 = 0.5;

/// Blocklist of deictic, locative and figure-context cues.
#[derive(Debug, Clone, Default)]
pub struct Blocklist {
    phrases: Vec<Vec<String>>,
    symbols: Vec<String>,
    years: bool,
}

impl Blocklist {
    pub fn parse(text: &str) -> Self {
        let mut list = Blocklist::default();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "<year>" {
                list.years = true;
            } else if line.chars().any(char::is_alphanumeric) {
                list.phrases.push(normalized_words(line).collect());
            } else {
                list.symbols.push(line.to_string());
            }
        }
        list
    }

    fn is_year(word: &str) -> bool {
        word.len() == 4
            && word.bytes().all(|b| b.is_ascii_digit())
            && word
                .parse::<u16>()
                .is_ok_and(|y| (1500..=2099).contains(&y))
    }

    /// The first entry matching the sentence, if any.
    pub fn first_hit(&self, raw: &str, words: &[String]) -> Option<String> {
        if let Some(sym) = self.symbols.iter().find(|s| raw.contains(s.as_str())) {
            return Some(sym.clone());
        }
        if self.years {
            if let Some(y) = words.iter().find(|w| Self::is_year(w)) {
                return Some(y.clone());
            }
        }
        self.phrases
            .iter()
            .find(|p| !p.is_empty() && words.windows(p.len()).any(|w| w == p.as_slice()))
            .map(|p| p.join(" "))
    }
}

/// Rule-based stand-in for a trained genericity classifier.
///
/// Starts from 1.0 and subtracts [`PENALTY`] when the sentence hits the
/// blocklist and again when it looks like a section title fused to the start
/// of the sentence (the first two content words repeat within the first
/// eight words).
#[derive(Debug, Clone)]
pub struct HeuristicScorer {
    blocklist: Blocklist,
    stopwords: BTreeSet<String>,
}

impl Default for HeuristicScorer {
    fn default() -> Self {
        HeuristicScorer::new(Blocklist::parse(DEFAULT_BLOCKLIST), default_stopwords())
    }
}

/// Which heuristic penalties fired for a sentence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Penalties {
    pub blocklist_hit: Option<String>,
    pub repeated_title: bool,
}

impl HeuristicScorer {
    pub const ID: &'static str = "heuristic-baseline";

    pub fn new(blocklist: Blocklist, stopwords: BTreeSet<String>) -> Self {
        HeuristicScorer {
            blocklist,
            stopwords,
        }
    }

    pub fn penalties(&self, text: &str) -> Penalties {
        let words: Vec<String> = normalized_words(text).collect();
        Penalties {
            blocklist_hit: self.blocklist.first_hit(text, &words),
            repeated_title: self.repeated_title(text),
        }
    }

    fn repeated_title(&self, text: &str) -> bool {
        let head: Vec<String> = text
            .split_whitespace()
            .take(8)
            .map(normalize_word)
            .collect();
        let mut content = head
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_empty() && !self.stopwords.contains(w.as_str()));
        let (Some((_, first)), Some((second_at, second))) = (content.next(), content.next()) else {
            return false;
        };
        let pair = [first.clone(), second.clone()];
        head[second_at + 1..].windows(2).any(|w| w == pair)
    }

    pub fn score_text(&self, text: &str) -> f64 {
        let p = self.penalties(text);
        let mut value = 1.0;
        if p.blocklist_hit.is_some() {
            value -= PENALTY;
        }
        if p.repeated_title {
            value -= PENALTY;
        }
        value
    }
}

impl Scorer for HeuristicScorer {
    fn id(&self) -> &str {
        Self::ID
    }

    fn score_batch(&self, texts: &[&str]) -> Result<Vec<f64>, ScoreError> {
        Ok(texts.iter().map(|t| self.score_text(t)).collect())
    }
}
