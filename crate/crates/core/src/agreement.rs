//! Human genericity judgments: sampling records for annotation and
//! measuring agreement between annotators.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LabelKind {
    Generic,
    Particular,
    Unclear,
}

impl LabelKind {
    pub const ALL: [LabelKind; 3] = [
        LabelKind::Generic,
        LabelKind::Particular,
        LabelKind::Unclear,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::Generic => "Generic",
            LabelKind::Particular => "Particular",
            LabelKind::Unclear => "Unclear",
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown annotation label {0:?}; expected Generic, Particular or Unclear")]
pub struct UnknownLabelKind(pub String);

impl FromStr for LabelKind {
    type Err = UnknownLabelKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LabelKind::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownLabelKind(s.to_string()))
    }
}

/// One annotator's label for one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub record_id: String,
    pub annotator_id: String,
    pub label: LabelKind,
}

/// Current label per (record, annotator). A later judgment by the same
/// annotator replaces the earlier one.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelBook {
    labels: BTreeMap<String, BTreeMap<String, LabelKind>>,
}

impl LabelBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores the judgment; returns true if it replaced an earlier one.
    pub fn submit(&mut self, j: &Judgment) -> bool {
        self.labels
            .entry(j.record_id.clone())
            .or_default()
            .insert(j.annotator_id.clone(), j.label)
            .is_some()
    }

    pub fn get(&self, record_id: &str, annotator_id: &str) -> Option<LabelKind> {
        self.labels.get(record_id)?.get(annotator_id).copied()
    }

    /// Labels per record, keyed by annotator.
    pub fn items(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, LabelKind>)> {
        self.labels.iter().map(|(r, m)| (r.as_str(), m))
    }

    pub fn len(&self) -> usize {
        self.labels.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl<'a> FromIterator<&'a Judgment> for LabelBook {
    fn from_iter<I: IntoIterator<Item = &'a Judgment>>(iter: I) -> Self {
        let mut book = LabelBook::new();
        for j in iter {
            book.submit(j);
        }
        book
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    /// Records with at least one label.
    pub n_items: usize,
    /// Records labeled by two or more annotators.
    pub n_double_labeled: usize,
    /// Share of doubly labeled records on which every annotator chose the
    /// same label, in percent. `None` when nothing is doubly labeled.
    pub percent_agreement: Option<f64>,
    /// Share of each label over all current labels, in percent.
    pub distribution: BTreeMap<LabelKind, f64>,
    /// Cohen's kappa, when exactly two annotators share items and expected
    /// agreement is below 1.
    pub cohen_kappa: Option<f64>,
    pub n_labels: usize,
}

/// Agreement and label distribution over the current labels in `book`.
pub fn agreement(book: &LabelBook) -> AgreementReport {
    let mut n_items = 0;
    let mut n_double = 0;
    let mut n_agree = 0;
    let mut pooled: BTreeMap<LabelKind, usize> =
        LabelKind::ALL.into_iter().map(|l| (l, 0)).collect();
    let mut n_labels = 0;
    for (_, by_annotator) in book.items() {
        if by_annotator.is_empty() {
            continue;
        }
        n_items += 1;
        for l in by_annotator.values() {
            *pooled.entry(*l).or_default() += 1;
            n_labels += 1;
        }
        if by_annotator.len() >= 2 {
            n_double += 1;
            let mut labels = by_annotator.values();
            let first = labels.next();
            if labels.all(|l| Some(l) == first) {
                n_agree += 1;
            }
        }
    }
    let distribution = pooled
        .into_iter()
        .map(|(l, c)| {
            let pct = if n_labels == 0 {
                0.0
            } else {
                100.0 * c as f64 / n_labels as f64
            };
            (l, pct)
        })
        .collect();
    AgreementReport {
        n_items,
        n_double_labeled: n_double,
        percent_agreement: (n_double > 0).then(|| 100.0 * n_agree as f64 / n_double as f64),
        distribution,
        cohen_kappa: cohen_kappa(book),
        n_labels,
    }
}

/// Cohen's kappa over the records both annotators labeled. Defined only when
/// exactly two annotators have shared records.
pub fn cohen_kappa(book: &LabelBook) -> Option<f64> {
    let annotators: BTreeSet<&str> = book
        .items()
        .filter(|(_, m)| m.len() >= 2)
        .flat_map(|(_, m)| m.keys().map(String::as_str))
        .collect();
    if annotators.len() != 2 {
        return None;
    }
    let mut it = annotators.iter();
    let (a, b) = (*it.next()?, *it.next()?);
    let mut n = 0usize;
    let mut observed = 0usize;
    let mut margin_a: BTreeMap<LabelKind, usize> = BTreeMap::new();
    let mut margin_b: BTreeMap<LabelKind, usize> = BTreeMap::new();
    for (_, m) in book.items() {
        if let (Some(la), Some(lb)) = (m.get(a), m.get(b)) {
            n += 1;
            if la == lb {
                observed += 1;
            }
            *margin_a.entry(*la).or_default() += 1;
            *margin_b.entry(*lb).or_default() += 1;
        }
    }
    if n == 0 {
        return None;
    }
    let n = n as f64;
    let po = observed as f64 / n;
    let pe: f64 = LabelKind::ALL
        .iter()
        .map(|l| {
            let pa = *margin_a.get(l).unwrap_or(&0) as f64 / n;
            let pb = *margin_b.get(l).unwrap_or(&0) as f64 / n;
            pa * pb
        })
        .sum();
    (pe < 1.0).then(|| (po - pe) / (1.0 - pe))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot sample from an empty dataset")]
pub struct EmptyDataset;

/// Uniform sample of `n` distinct ids without replacement, reproducible for
/// a given seed. Ids are deduplicated and sorted first, so the input order
/// does not matter. `n` is capped at the number of ids.
pub fn sample_batch<S: AsRef<str>>(
    record_ids: &[S],
    n: usize,
    seed: u64,
) -> Result<Vec<String>, EmptyDataset> {
    let pool: Vec<&str> = record_ids
        .iter()
        .map(AsRef::as_ref)
        .collect::<BTreeSet<&str>>()
        .into_iter()
        .collect();
    if pool.is_empty() {
        return Err(EmptyDataset);
    }
    let amount = n.min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, pool.len(), amount)
        .into_iter()
        .map(|i| pool[i].to_string())
        .collect())
}
