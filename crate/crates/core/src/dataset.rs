//! Mined records and the candidate / generalization tally.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::document::SourceTag;
use crate::filters::{GenLabel, Quantifier, QuantifierPosition};
use crate::scoring::GenericityScore;

/// Serialized label string for generics.
pub const GENERIC_LABEL: &str = "GEN";

/// A label without its position: the rows of the counts table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LabelKey {
    Generic,
    Quantifier(Quantifier),
}

impl LabelKey {
    /// Generic first, then the quantifiers in inventory order.
    pub fn all() -> impl Iterator<Item = LabelKey> {
        core::iter::once(LabelKey::Generic)
            .chain(Quantifier::ALL.into_iter().map(LabelKey::Quantifier))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelKey::Generic => GENERIC_LABEL,
            LabelKey::Quantifier(q) => q.as_str(),
        }
    }
}

impl From<GenLabel> for LabelKey {
    fn from(label: GenLabel) -> Self {
        match label.quantifier() {
            None => LabelKey::Generic,
            Some(q) => LabelKey::Quantifier(q),
        }
    }
}

impl fmt::Display for LabelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label {0:?}")]
pub struct UnknownLabel(pub String);

impl FromStr for LabelKey {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == GENERIC_LABEL {
            return Ok(LabelKey::Generic);
        }
        s.parse::<Quantifier>()
            .map(LabelKey::Quantifier)
            .map_err(|_| UnknownLabel(s.to_string()))
    }
}

impl Serialize for LabelKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for LabelKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One mined sentence with its label, score and a reference to its document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "RecordRepr", try_from = "RecordRepr")]
pub struct MGenRecord {
    pub record_id: String,
    pub sentence: String,
    /// The text handed to the scorer: the sentence, minus a leading
    /// quantifier for quantifier-initial sentences.
    pub scored_text: String,
    pub label: GenLabel,
    pub score: GenericityScore,
    pub source: SourceTag,
    pub doc_id: String,
    pub sent_index: u32,
    pub char_start: usize,
    pub char_end: usize,
    /// Full document text, only when the run inlines context.
    pub context: Option<String>,
}

impl MGenRecord {
    /// Record ids are `<doc_id>#<sent_index>`.
    pub fn make_id(doc_id: &str, sent_index: u32) -> String {
        format!("{doc_id}#{sent_index}")
    }

    pub fn label_key(&self) -> LabelKey {
        self.label.into()
    }

    /// Output order: by document id, then sentence position.
    pub fn sort_key(&self) -> (&str, u32) {
        (&self.doc_id, self.sent_index)
    }
}

#[derive(Serialize, Deserialize)]
struct RecordRepr {
    record_id: String,
    sentence: String,
    scored_text: String,
    label: LabelKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    quantifier_position: Option<QuantifierPosition>,
    score: f64,
    scorer_id: String,
    source: SourceTag,
    doc_id: String,
    sent_index: u32,
    char_start: usize,
    char_end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    context: Option<String>,
}

impl From<MGenRecord> for RecordRepr {
    fn from(r: MGenRecord) -> Self {
        let (label, quantifier_position) = match r.label {
            GenLabel::Generic => (LabelKey::Generic, None),
            GenLabel::Quantified {
                quantifier,
                position,
            } => (LabelKey::Quantifier(quantifier), Some(position)),
        };
        RecordRepr {
            record_id: r.record_id,
            sentence: r.sentence,
            scored_text: r.scored_text,
            label,
            quantifier_position,
            score: r.score.value,
            scorer_id: r.score.scorer_id,
            source: r.source,
            doc_id: r.doc_id,
            sent_index: r.sent_index,
            char_start: r.char_start,
            char_end: r.char_end,
            context: r.context,
        }
    }
}

impl TryFrom<RecordRepr> for MGenRecord {
    type Error = String;

    fn try_from(r: RecordRepr) -> Result<Self, String> {
        let label = match (r.label, r.quantifier_position) {
            (LabelKey::Generic, None) => GenLabel::Generic,
            (LabelKey::Quantifier(quantifier), Some(position)) => GenLabel::Quantified {
                quantifier,
                position,
            },
            (LabelKey::Generic, Some(_)) => {
                return Err("generic record with a quantifier position".into())
            }
            (LabelKey::Quantifier(_), None) => {
                return Err("quantified record without a position".into())
            }
        };
        let score = GenericityScore::new(r.score, r.scorer_id).map_err(|e| e.to_string())?;
        if r.char_end < r.char_start {
            return Err("char_end before char_start".into());
        }
        Ok(MGenRecord {
            record_id: r.record_id,
            sentence: r.sentence,
            scored_text: r.scored_text,
            label,
            score,
            source: r.source,
            doc_id: r.doc_id,
            sent_index: r.sent_index,
            char_start: r.char_start,
            char_end: r.char_end,
            context: r.context,
        })
    }
}

/// Per-label counts after the syntactic filter (candidates) and after the
/// score threshold (generalizations). Every label has a row, zero or not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub candidates: BTreeMap<LabelKey, u64>,
    pub generalizations: BTreeMap<LabelKey, u64>,
    pub candidates_total: u64,
    pub generalizations_total: u64,
}

impl Default for CountsTable {
    fn default() -> Self {
        let zeros: BTreeMap<LabelKey, u64> = LabelKey::all().map(|l| (l, 0)).collect();
        CountsTable {
            candidates: zeros.clone(),
            generalizations: zeros,
            candidates_total: 0,
            generalizations_total: 0,
        }
    }
}

impl CountsTable {
    pub fn new() -> Self {
        CountsTable::default()
    }

    /// Counts one candidate; `accepted` also counts it as a generalization.
    pub fn add(&mut self, label: impl Into<LabelKey>, accepted: bool) {
        let label = label.into();
        *self.candidates.entry(label).or_default() += 1;
        self.candidates_total += 1;
        if accepted {
            *self.generalizations.entry(label).or_default() += 1;
            self.generalizations_total += 1;
        }
    }

    pub fn merge(&mut self, other: &CountsTable) {
        for (l, n) in &other.candidates {
            *self.candidates.entry(*l).or_default() += n;
        }
        for (l, n) in &other.generalizations {
            *self.generalizations.entry(*l).or_default() += n;
        }
        self.candidates_total += other.candidates_total;
        self.generalizations_total += other.generalizations_total;
    }

    pub fn candidates(&self, label: LabelKey) -> u64 {
        self.candidates.get(&label).copied().unwrap_or(0)
    }

    pub fn generalizations(&self, label: LabelKey) -> u64 {
        self.generalizations.get(&label).copied().unwrap_or(0)
    }

    /// Generalizations never exceed candidates, and totals match their rows.
    pub fn is_consistent(&self) -> bool {
        LabelKey::all().all(|l| self.generalizations(l) <= self.candidates(l))
            && self.candidates.values().sum::<u64>() == self.candidates_total
            && self.generalizations.values().sum::<u64>() == self.generalizations_total
    }

    /// Aligned plain-text rendering.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{:<10} {:>12} {:>16}\n",
            "label", "candidates", "generalizations"
        );
        for l in LabelKey::all() {
            out.push_str(&format!(
                "{:<10} {:>12} {:>16}\n",
                l.as_str(),
                self.candidates(l),
                self.generalizations(l)
            ));
        }
        out.push_str(&format!(
            "{:<10} {:>12} {:>16}\n",
            "TOTAL", self.candidates_total, self.generalizations_total
        ));
        out
    }
}

/// Tallies `(label, accepted)` outcomes.
pub fn tally<L: Into<LabelKey>>(outcomes: impl IntoIterator<Item = (L, bool)>) -> CountsTable {
    let mut table = CountsTable::new();
    for (label, accepted) in outcomes {
        table.add(label, accepted);
    }
    table
}

/// Per-source record counts.
pub fn source_composition<'a>(
    records: impl IntoIterator<Item = &'a MGenRecord>,
) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry(r.source.as_str().to_string()).or_default() += 1;
    }
    out
}

/// Sorts records into output order.
pub fn sort_records(records: &mut [MGenRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Records sorted into output order.
pub fn sorted(mut records: Vec<MGenRecord>) -> Vec<MGenRecord> {
    sort_records(&mut records);
    records
}
