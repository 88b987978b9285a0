//! Statistics and diversity reports over a run directory.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use genmine_core::agreement::sample_batch;
use genmine_core::analysis::{
    common_words, distinct_n, diversity_cossim, length_stats, CossimReport, DistinctReport,
    HeadLemmaCounts, HeadLemmas, LengthStats, WordTokenizer,
};
use genmine_core::dataset::source_composition;
use genmine_core::scoring::default_stopwords;
use genmine_core::{MGenRecord, ParsedSentence};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parses::read_parses;
use crate::store::{self, write_json, RunDir};

#[derive(Debug, Clone)]
pub struct StatsOptions {
    pub top_k: usize,
    pub stopwords: BTreeSet<String>,
}

impl Default for StatsOptions {
    fn default() -> Self {
        Self {
            top_k: 50,
            stopwords: default_stopwords(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceShare {
    pub records: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub length: LengthStats,
    pub common_words: Vec<(String, u64)>,
    pub sources: BTreeMap<String, SourceShare>,
}

pub fn compute_stats(records: &[MGenRecord], opts: &StatsOptions) -> StatsReport {
    let sentences = records.iter().map(|r| r.sentence.as_str());
    let length = length_stats(sentences.clone());
    let common = common_words(sentences, &opts.stopwords, opts.top_k);
    let total = records.len().max(1) as f64;
    let sources = source_composition(records)
        .into_iter()
        .map(|(s, n)| {
            let share = SourceShare {
                records: n,
                percent: 100.0 * n as f64 / total,
            };
            (s, share)
        })
        .collect();
    StatsReport {
        length,
        common_words: common,
        sources,
    }
}

/// Writes `stats/length.json`, `stats/length_plot.csv`, `stats/summary.txt`
/// and `stats/report.json`.
pub fn write_stats(
    run: &RunDir,
    records: &[MGenRecord],
    opts: &StatsOptions,
) -> Result<StatsReport> {
    let report = compute_stats(records, opts);
    let dir = run.path(store::STATS);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    write_json(&dir.join("report.json"), &report)?;
    write_json(&dir.join("length.json"), &report.length)?;

    let mut csv = String::from("length,percentage\n");
    for (len, pct) in report.length.percentages() {
        let _ = writeln!(csv, "{len},{pct}");
    }
    let path = dir.join("length_plot.csv");
    fs::write(&path, csv).map_err(|e| Error::io(path, e))?;

    let path = dir.join("summary.txt");
    fs::write(&path, render_stats(&report)).map_err(|e| Error::io(path, e))?;
    Ok(report)
}

fn fmt_opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| v.to_string())
}

pub fn render_stats(report: &StatsReport) -> String {
    let l = &report.length;
    let mut out = String::new();
    let _ = writeln!(out, "sentences  {}", l.n);
    let _ = writeln!(
        out,
        "mean       {}",
        fmt_opt(l.mean.map(|m| format!("{m:.2}")))
    );
    let _ = writeln!(
        out,
        "std        {}",
        fmt_opt(l.std.map(|m| format!("{m:.2}")))
    );
    let _ = writeln!(out, "median     {}", fmt_opt(l.median));
    let _ = writeln!(out, "\nsource          records  percent");
    for (s, share) in &report.sources {
        let _ = writeln!(out, "{s:<15} {:>7}  {:>6.2}", share.records, share.percent);
    }
    let _ = writeln!(out, "\nrank  word                 count");
    for (i, (w, c)) in report.common_words.iter().enumerate() {
        let _ = writeln!(out, "{:>4}  {w:<20} {c:>5}", i + 1);
    }
    out
}

/// The `stats` command.
pub fn stats(run_dir: &Path, opts: &StatsOptions) -> Result<StatsReport> {
    let run = RunDir::new(run_dir);
    let records = run.read_records(store::RECORDS)?;
    write_stats(&run, &records, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityConfig {
    /// Number of sampled groups for the similarity measure.
    pub groups: usize,
    /// Sentences per group.
    pub group_size: usize,
    pub n_values: Vec<usize>,
    /// Tokens read for distinct-n.
    pub token_budget: usize,
    /// Sentences read for head lemmas.
    pub lemma_budget: usize,
    pub seed: u64,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        Self {
            groups: 1000,
            group_size: 1000,
            n_values: vec![1, 2, 3],
            token_budget: 1_000_000,
            lemma_budget: 200_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub d_cossim: Option<CossimReport>,
    pub distinct: DistinctReport,
    pub head_lemmas: HeadLemmaCounts,
    pub sampling: DiversityConfig,
    pub embeddings_read: usize,
    pub embedding_errors: usize,
}

#[derive(Deserialize)]
struct EmbeddingLine {
    id: String,
    vec: Vec<f64>,
}

/// Embeddings keyed by record id. Undecodable lines and repeated ids are
/// counted, not fatal.
#[derive(Debug, Default)]
pub struct Embeddings {
    pub vectors: HashMap<String, Vec<f64>>,
    pub errors: usize,
}

pub fn read_embeddings(path: &Path) -> Result<Embeddings> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Embeddings::default();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match serde_json::from_str::<EmbeddingLine>(line) {
            Ok(e) if !out.vectors.contains_key(&e.id) => {
                out.vectors.insert(e.id, e.vec);
            }
            _ => out.errors += 1,
        }
    }
    Ok(out)
}

/// Per-group seed, so groups are independent samples.
fn group_seed(seed: u64, group: usize) -> u64 {
    seed ^ (group as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn sample_groups<'a>(embeddings: &'a Embeddings, cfg: &DiversityConfig) -> Vec<Vec<&'a [f64]>> {
    let ids: Vec<&str> = embeddings.vectors.keys().map(String::as_str).collect();
    (0..cfg.groups)
        .filter_map(|g| sample_batch(&ids, cfg.group_size, group_seed(cfg.seed, g)).ok())
        .map(|sample| {
            sample
                .iter()
                .map(|id| embeddings.vectors[id].as_slice())
                .collect()
        })
        .collect()
}

/// Records in a seeded random order.
fn shuffled<T>(items: &[T], key: impl Fn(&T) -> &str, seed: u64) -> Vec<&T> {
    let keys: Vec<&str> = items.iter().map(&key).collect();
    let Ok(order) = sample_batch(&keys, keys.len(), seed) else {
        return Vec::new();
    };
    let by_key: HashMap<&str, &T> = items.iter().map(|i| (key(i), i)).collect();
    order.iter().map(|k| by_key[k.as_str()]).collect()
}

pub fn compute_diversity(
    records: &[MGenRecord],
    parses: &[ParsedSentence],
    embeddings: Option<&Embeddings>,
    cfg: &DiversityConfig,
) -> Result<DiversityReport> {
    let d_cossim = match embeddings {
        Some(e) => Some(
            diversity_cossim(&sample_groups(e, cfg))
                .map_err(|err| Error::stage("diversity", err))?,
        ),
        None => None,
    };
    let ordered = shuffled(records, |r| r.record_id.as_str(), cfg.seed);
    let distinct = distinct_n(
        ordered.iter().map(|r| r.sentence.as_str()),
        &WordTokenizer,
        &cfg.n_values,
        Some(cfg.token_budget),
    );
    let ids: Vec<String> = parses
        .iter()
        .map(|p| MGenRecord::make_id(&p.span_ref.doc_id, p.span_ref.sent_index))
        .collect();
    let by_id: HashMap<&str, &ParsedSentence> =
        ids.iter().map(String::as_str).zip(parses).collect();
    let lemma_sample = sample_batch(&ids, cfg.lemma_budget, cfg.seed).unwrap_or_default();
    let mut lemmas = HeadLemmas::default();
    for id in &lemma_sample {
        lemmas.add(by_id[id.as_str()]);
    }
    Ok(DiversityReport {
        d_cossim,
        distinct,
        head_lemmas: lemmas.counts(),
        sampling: cfg.clone(),
        embeddings_read: embeddings.map_or(0, |e| e.vectors.len()),
        embedding_errors: embeddings.map_or(0, |e| e.errors),
    })
}

pub fn render_diversity(r: &DiversityReport) -> String {
    let mut out = String::new();
    match &r.d_cossim {
        Some(c) => {
            let _ = writeln!(
                out,
                "d_cossim        {:.4} +/- {:.4}  ({} groups)",
                c.mean,
                c.std,
                c.group_scores.len()
            );
        }
        None => {
            let _ = writeln!(out, "d_cossim        undefined (no embeddings)");
        }
    }
    for (n, count) in &r.distinct.counts {
        let _ = writeln!(out, "distinct-{n}      {count}");
    }
    let _ = writeln!(out, "tokens read     {}", r.distinct.tokens_consumed);
    let h = &r.head_lemmas;
    let _ = writeln!(out, "subject lemmas  {}", h.subject);
    let _ = writeln!(out, "verb lemmas     {}", h.verb);
    let _ = writeln!(out, "object lemmas   {}", h.object);
    let _ = writeln!(out, "lemma sentences {}", h.sentences);
    out
}

/// The `diversity` command: reads the run's records and parses, writes
/// `diversity.json` and `diversity.txt`.
pub fn diversity(
    run_dir: &Path,
    embeddings: Option<&Path>,
    cfg: &DiversityConfig,
) -> Result<DiversityReport> {
    let run = RunDir::new(run_dir);
    let records = run.read_records(store::RECORDS)?;
    let parses_path = run.path(store::PARSES);
    let parses = if parses_path.exists() {
        read_parses(&parses_path)?.sentences
    } else {
        Vec::new()
    };
    let embeddings = embeddings.map(read_embeddings).transpose()?;
    let report = compute_diversity(&records, &parses, embeddings.as_ref(), cfg)?;
    write_json(&run.path("diversity.json"), &report)?;
    let path = run.path("diversity.txt");
    fs::write(&path, render_diversity(&report)).map_err(|e| Error::io(path, e))?;
    Ok(report)
}
