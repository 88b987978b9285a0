//! Corpus statistics and diversity measures.
//!
//! Every accumulator here is mergeable, so per-worker partial results can be
//! combined in any order with the same outcome.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::conllu::ParsedSentence;
use crate::filters::main_verb;
use crate::text::normalized_words;

/// Number of maximal non-whitespace runs.
pub fn word_count(sentence: &str) -> usize {
    sentence.split_whitespace().count()
}

/// Histogram of sentence lengths in words.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    counts: BTreeMap<usize, u64>,
    n: u64,
}

impl LengthHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_length(&mut self, words: usize) {
        *self.counts.entry(words).or_default() += 1;
        self.n += 1;
    }

    pub fn add(&mut self, sentence: &str) {
        self.add_length(word_count(sentence));
    }

    pub fn merge(&mut self, other: &LengthHistogram) {
        for (len, c) in &other.counts {
            *self.counts.entry(*len).or_default() += c;
        }
        self.n += other.n;
    }

    pub fn finish(&self) -> LengthStats {
        let n = self.n;
        if n == 0 {
            return LengthStats {
                histogram: self.counts.clone(),
                n,
                mean: None,
                std: None,
                median: None,
            };
        }
        let sum: f64 = self.counts.iter().map(|(l, c)| *l as f64 * *c as f64).sum();
        let mean = sum / n as f64;
        let var: f64 = self
            .counts
            .iter()
            .map(|(l, c)| {
                let d = *l as f64 - mean;
                d * d * *c as f64
            })
            .sum::<f64>()
            / n as f64;
        // Lower of the two middle values for even n.
        let target = (n - 1) / 2;
        let mut seen = 0;
        let mut median = 0;
        for (len, c) in &self.counts {
            if seen + c > target {
                median = *len;
                break;
            }
            seen += c;
        }
        LengthStats {
            histogram: self.counts.clone(),
            n,
            mean: Some(mean),
            std: Some(libm::sqrt(var)),
            median: Some(median),
        }
    }
}

/// Sentence-length summary. Mean, standard deviation (population) and median
/// are `None` for an empty input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub histogram: BTreeMap<usize, u64>,
    pub n: u64,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub median: Option<usize>,
}

impl LengthStats {
    /// `(length, percentage of sentences)` rows for plotting.
    pub fn percentages(&self) -> Vec<(usize, f64)> {
        if self.n == 0 {
            return Vec::new();
        }
        self.histogram
            .iter()
            .map(|(l, c)| (*l, 100.0 * *c as f64 / self.n as f64))
            .collect()
    }
}

pub fn length_stats<S: AsRef<str>>(sentences: impl IntoIterator<Item = S>) -> LengthStats {
    let mut h = LengthHistogram::new();
    for s in sentences {
        h.add(s.as_ref());
    }
    h.finish()
}

/// Word frequencies with stopwords and punctuation removed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordCounter {
    counts: BTreeMap<String, u64>,
}

impl WordCounter {
    pub fn add(&mut self, sentence: &str, stopwords: &BTreeSet<String>) {
        for w in normalized_words(sentence) {
            if !stopwords.contains(&w) {
                *self.counts.entry(w).or_default() += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &WordCounter) {
        for (w, c) in &other.counts {
            *self.counts.entry(w.clone()).or_default() += c;
        }
    }

    /// Top `k` by count; ties in alphabetical order.
    pub fn top(&self, k: usize) -> Vec<(String, u64)> {
        let mut all: Vec<(String, u64)> =
            self.counts.iter().map(|(w, c)| (w.clone(), *c)).collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }
}

pub fn common_words<S: AsRef<str>>(
    sentences: impl IntoIterator<Item = S>,
    stopwords: &BTreeSet<String>,
    k: usize,
) -> Vec<(String, u64)> {
    let mut counter = WordCounter::default();
    for s in sentences {
        counter.add(s.as_ref(), stopwords);
    }
    counter.top(k)
}

/// Splits a sentence into the tokens n-grams are built from.
pub trait Tokenizer {
    fn tokenize(&self, sentence: &str) -> Vec<String>;
}

/// Whitespace split, punctuation trimmed from both ends, lowercased; tokens
/// that are only punctuation are dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct WordTokenizer;

impl Tokenizer for WordTokenizer {
    fn tokenize(&self, sentence: &str) -> Vec<String> {
        normalized_words(sentence).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinctReport {
    /// n -> number of unique n-grams.
    pub counts: BTreeMap<usize, usize>,
    pub tokens_consumed: usize,
    pub sentences_consumed: usize,
}

/// Counts unique n-grams for each `n` in `n_values`.
///
/// Sentences are consumed whole until at least `budget` tokens have been
/// read (`None` reads everything). N-grams never span two sentences.
pub fn distinct_n<S: AsRef<str>>(
    sentences: impl IntoIterator<Item = S>,
    tokenizer: &dyn Tokenizer,
    n_values: &[usize],
    budget: Option<usize>,
) -> DistinctReport {
    let mut vocab: BTreeMap<String, u32> = BTreeMap::new();
    let mut grams: BTreeMap<usize, BTreeSet<Vec<u32>>> =
        n_values.iter().map(|&n| (n, BTreeSet::new())).collect();
    let mut tokens_consumed = 0;
    let mut sentences_consumed = 0;
    for s in sentences {
        if budget.is_some_and(|b| tokens_consumed >= b) {
            break;
        }
        let ids: Vec<u32> = tokenizer
            .tokenize(s.as_ref())
            .into_iter()
            .map(|t| {
                let next = vocab.len() as u32;
                *vocab.entry(t).or_insert(next)
            })
            .collect();
        tokens_consumed += ids.len();
        sentences_consumed += 1;
        for (&n, set) in grams.iter_mut() {
            if n == 0 {
                continue;
            }
            for w in ids.windows(n) {
                set.insert(w.to_vec());
            }
        }
    }
    DistinctReport {
        counts: grams.into_iter().map(|(n, set)| (n, set.len())).collect(),
        tokens_consumed,
        sentences_consumed,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiversityError {
    #[error("vectors have different dimensions ({expected} vs {got})")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no group has at least two usable vectors")]
    NoUsableGroups,
}

/// Diversity-from-similarity summary across sample groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CossimReport {
    pub mean: f64,
    pub std: f64,
    pub group_scores: Vec<f64>,
    /// Zero vectors, for which cosine similarity is undefined.
    pub dropped_vectors: usize,
    /// Groups left with fewer than two vectors after dropping.
    pub skipped_groups: usize,
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    (norm > 0.0 && norm.is_finite()).then(|| v.iter().map(|x| x / norm).collect())
}

/// Negated mean cosine similarity over all unordered pairs of one group.
/// Returns `None` when the group has fewer than two non-zero vectors.
pub fn group_diversity<V: AsRef<[f64]>>(vectors: &[V]) -> Option<f64> {
    let units: Vec<Vec<f64>> = vectors.iter().filter_map(|v| unit(v.as_ref())).collect();
    pairwise_diversity(&units)
}

fn pairwise_diversity(units: &[Vec<f64>]) -> Option<f64> {
    let n = units.len();
    if n < 2 {
        return None;
    }
    let mut sims = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            sims.push(
                units[i]
                    .iter()
                    .zip(&units[j])
                    .map(|(a, b)| a * b)
                    .sum::<f64>(),
            );
        }
    }
    // Summing in sorted order makes the result independent of input order.
    sims.sort_unstable_by(f64::total_cmp);
    let pairs = sims.len() as f64;
    Some(-sims.iter().sum::<f64>() / pairs)
}

/// Mean and population standard deviation of the per-group diversity.
pub fn diversity_cossim<G, V>(groups: &[G]) -> Result<CossimReport, DiversityError>
where
    G: AsRef<[V]>,
    V: AsRef<[f64]>,
{
    let mut dim = None;
    let mut dropped_vectors = 0;
    let mut skipped_groups = 0;
    let mut group_scores = Vec::new();
    for group in groups {
        let mut units = Vec::new();
        for v in group.as_ref() {
            let v = v.as_ref();
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(DiversityError::DimensionMismatch {
                        expected: d,
                        got: v.len(),
                    })
                }
                _ => {}
            }
            match unit(v) {
                Some(u) => units.push(u),
                None => dropped_vectors += 1,
            }
        }
        match pairwise_diversity(&units) {
            Some(d) => group_scores.push(d),
            None => skipped_groups += 1,
        }
    }
    if group_scores.is_empty() {
        return Err(DiversityError::NoUsableGroups);
    }
    let (mean, std) = mean_std(&group_scores);
    Ok(CossimReport {
        mean,
        std,
        group_scores,
        dropped_vectors,
        skipped_groups,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

/// Unique lemmas in subject, main-verb and object position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeadLemmas {
    pub subjects: BTreeSet<String>,
    pub verbs: BTreeSet<String>,
    pub objects: BTreeSet<String>,
    pub sentences: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadLemmaCounts {
    pub subject: usize,
    pub verb: usize,
    pub object: usize,
    pub sentences: usize,
}

fn lemma_of(tok: &crate::conllu::Token) -> Option<String> {
    (tok.lemma != "_" && !tok.lemma.is_empty()).then(|| tok.lemma.to_lowercase())
}

/// The (subject, verb, object) lemmas of a sentence's main clause.
///
/// Subject: the leftmost `nsubj`/`nsubj:pass` dependent of the root. Verb:
/// the main verb as chosen by the bare-plural check. Object: the leftmost
/// `obj` dependent of the root, falling back to the leftmost `obl`.
pub fn clause_lemmas(parsed: &ParsedSentence) -> [Option<String>; 3] {
    let root = parsed.root().index;
    let subject = parsed
        .children(root)
        .find(|t| t.deprel == "nsubj" || t.deprel == "nsubj:pass")
        .and_then(lemma_of);
    let verb = main_verb(parsed).and_then(lemma_of);
    let object = parsed
        .children(root)
        .find(|t| t.deprel == "obj")
        .or_else(|| parsed.children(root).find(|t| t.deprel == "obl"))
        .and_then(lemma_of);
    [subject, verb, object]
}

impl HeadLemmas {
    pub fn add(&mut self, parsed: &ParsedSentence) {
        let [s, v, o] = clause_lemmas(parsed);
        self.subjects.extend(s);
        self.verbs.extend(v);
        self.objects.extend(o);
        self.sentences += 1;
    }

    pub fn merge(&mut self, other: &HeadLemmas) {
        self.subjects.extend(other.subjects.iter().cloned());
        self.verbs.extend(other.verbs.iter().cloned());
        self.objects.extend(other.objects.iter().cloned());
        self.sentences += other.sentences;
    }

    pub fn counts(&self) -> HeadLemmaCounts {
        HeadLemmaCounts {
            subject: self.subjects.len(),
            verb: self.verbs.len(),
            object: self.objects.len(),
            sentences: self.sentences,
        }
    }
}

/// Accumulates head lemmas over at most `budget` sentences.
pub fn head_lemmas<'a>(
    parses: impl IntoIterator<Item = &'a ParsedSentence>,
    budget: Option<usize>,
) -> HeadLemmas {
    let mut acc = HeadLemmas::default();
    for p in parses.into_iter().take(budget.unwrap_or(usize::MAX)) {
        acc.add(p);
    }
    acc
}
