//! The mining pipeline: ingest, segment, parse, filter, label, score,
//! threshold, emit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use genmine_core::document::char_slice;
use genmine_core::filters::{detect_label, is_bare_plural, prefilter};
use genmine_core::scoring::{accept, strip_quantifier};
use genmine_core::{
    CountsTable, Document, GenLabel, GenericityScore, MGenRecord, ParsedSentence, PrefilterOutcome,
    QuantifierInventory, RuleSegmenter, Scorer, Segmenter, SentenceSpan, SourceTag,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotator::AnnotatorClient;
use crate::config::{ParseSourceConfig, RunConfig};
use crate::corpus::{Loader, RecordError};
use crate::error::{Error, Result};
use crate::parses::{read_parses, ParseIndex, ParseSource};
use crate::reports;
use crate::scorer::{build_scorer, score_batches};
use crate::store::{self, create_file, RecordSink, RunDir};

/// A sentence that passed the syntactic filter, waiting for its score.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub span: SentenceSpan,
    pub source: SourceTag,
    pub label: GenLabel,
    pub scored_text: String,
    pub parsed: ParsedSentence,
}

/// Named counters. Mergeable, so workers can keep their own.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies(pub BTreeMap<String, u64>);

impl Tallies {
    pub fn bump(&mut self, key: &str) {
        self.add(key, 1);
    }

    pub fn add(&mut self, key: &str, n: u64) {
        *self.0.entry(key.to_string()).or_default() += n;
    }

    pub fn merge(&mut self, other: &Tallies) {
        for (k, v) in &other.0 {
            self.add(k, *v);
        }
    }

    pub fn get(&self, key: &str) -> u64 {
        self.0.get(key).copied().unwrap_or(0)
    }
}

#[derive(Debug, Default)]
pub struct DocOutcome {
    pub candidates: Vec<Candidate>,
    pub tallies: Tallies,
}

/// Runs every stage up to scoring on one document.
pub fn process_document(
    doc: &Document,
    segmenter: &dyn Segmenter,
    parses: &dyn ParseSource,
    inventory: &QuantifierInventory,
) -> DocOutcome {
    let mut out = DocOutcome::default();
    let spans = segmenter.segment(doc);
    out.tallies.add("sentences", spans.len() as u64);
    let parsed = parses.parse_spans(&spans);
    for (span, parsed) in spans.into_iter().zip(parsed) {
        let parsed = match parsed {
            Ok(p) => p,
            Err(e) => {
                out.tallies.bump(e.kind());
                continue;
            }
        };
        let gate = prefilter(parsed.tokens(), inventory);
        if gate == PrefilterOutcome::Reject {
            out.tallies.bump("prefilter-rejected");
            continue;
        }
        let check = is_bare_plural(&parsed);
        if let Some(reason) = check.fail_reason() {
            out.tallies.bump(&format!("syntactic-{}", reason.as_str()));
            continue;
        }
        let label = detect_label(&parsed, gate, inventory);
        let scored_text = match gate {
            PrefilterOutcome::QuantifierInitial(q) => match strip_quantifier(&span.text, q) {
                Ok(text) => text,
                Err(_) => {
                    out.tallies.bump("strip-error");
                    continue;
                }
            },
            _ => span.text.clone(),
        };
        out.candidates.push(Candidate {
            span,
            source: doc.source().clone(),
            label,
            scored_text,
            parsed,
        });
    }
    out
}

/// Everything a run produced, in output order.
#[derive(Debug, Default)]
pub struct MineOutput {
    /// Scored candidates, sorted by (doc_id, sent_index).
    pub candidates: Vec<MGenRecord>,
    pub accepted: Vec<MGenRecord>,
    pub counts: CountsTable,
    pub tallies: Tallies,
    pub record_errors: Vec<RecordError>,
    /// Parses of accepted records, aligned with `accepted`.
    pub accepted_parses: Vec<ParsedSentence>,
    pub documents: Vec<Document>,
}

/// Mines in memory. `scorer` and `parses` are supplied by the caller.
pub fn mine_documents(
    documents: &[Document],
    parses: &dyn ParseSource,
    scorer: &(dyn Scorer + Sync),
    cfg: &RunConfig,
) -> Result<MineOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::stage("workers", e))?;
    let segmenter = RuleSegmenter::default();
    let inventory = QuantifierInventory::standard();
    let outcomes: Vec<DocOutcome> = pool.install(|| {
        documents
            .par_iter()
            .map(|doc| process_document(doc, &segmenter, parses, &inventory))
            .collect()
    });

    let mut tallies = Tallies::default();
    let mut pending = Vec::new();
    for o in outcomes {
        tallies.merge(&o.tallies);
        pending.extend(o.candidates);
    }
    pending.sort_by(|a, b| {
        (a.span.doc_id.as_str(), a.span.sent_index)
            .cmp(&(b.span.doc_id.as_str(), b.span.sent_index))
    });

    let texts: Vec<&str> = pending.iter().map(|c| c.scored_text.as_str()).collect();
    let batch_size = cfg.scorer.batch_size.max(1);
    let scored = if texts.is_empty() {
        Vec::new()
    } else {
        pool.install(|| score_batches(&texts, scorer, batch_size, cfg.max_in_flight))
    };

    let by_id: BTreeMap<&str, &Document> = documents.iter().map(|d| (d.doc_id(), d)).collect();
    let mut out = MineOutput::default();
    for (chunk, result) in pending.chunks(batch_size).zip(scored) {
        let scores = match result {
            Ok(s) => s,
            Err(_) => {
                tallies.add("score-error", chunk.len() as u64);
                continue;
            }
        };
        for (c, score) in chunk.iter().zip(scores) {
            let accepted = accept(&score, &cfg.scorer);
            out.counts.add(c.label, accepted);
            let record = to_record(
                c,
                score,
                cfg.inline_context.then(|| by_id[c.span.doc_id.as_str()]),
            );
            if accepted {
                out.accepted.push(record.clone());
                out.accepted_parses.push(c.parsed.clone());
            }
            out.candidates.push(record);
        }
    }
    out.tallies = tallies;
    Ok(out)
}

fn to_record(c: &Candidate, score: GenericityScore, inline: Option<&Document>) -> MGenRecord {
    MGenRecord {
        record_id: MGenRecord::make_id(&c.span.doc_id, c.span.sent_index),
        sentence: c.span.text.clone(),
        scored_text: c.scored_text.clone(),
        label: c.label,
        score,
        source: c.source.clone(),
        doc_id: c.span.doc_id.clone(),
        sent_index: c.span.sent_index,
        char_start: c.span.char_start,
        char_end: c.span.char_end,
        context: inline.map(|d| d.text().to_string()),
    }
}

/// Records whose id hashes into the lowest 1/100 of the space, plus the
/// first record so small runs are never left unchecked.
pub fn round_trip_sample(records: &[MGenRecord]) -> Vec<&MGenRecord> {
    records
        .iter()
        .enumerate()
        .filter(|(i, r)| {
            let h = Sha256::digest(r.record_id.as_bytes());
            *i == 0 || u16::from_be_bytes([h[0], h[1]]) < u16::MAX / 100
        })
        .map(|(_, r)| r)
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub checked: usize,
    pub failed: Vec<String>,
}

/// Checks sampled records against their document spans.
pub fn check_round_trip(records: &[MGenRecord], documents: &[Document]) -> RoundTrip {
    let by_id: BTreeMap<&str, &Document> = documents.iter().map(|d| (d.doc_id(), d)).collect();
    let mut rt = RoundTrip::default();
    for r in round_trip_sample(records) {
        rt.checked += 1;
        let ok = by_id
            .get(r.doc_id.as_str())
            .and_then(|d| char_slice(d.text(), r.char_start, r.char_end))
            == Some(r.sentence.as_str());
        if !ok {
            rt.failed.push(r.record_id.clone());
        }
    }
    rt
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(InputDigest {
        path: path.to_path_buf(),
        sha256: hex(&Sha256::digest(&data)),
        bytes: data.len() as u64,
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    pub parse_inputs: Vec<InputDigest>,
    pub documents: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub tallies: Tallies,
    pub record_errors: Vec<RecordError>,
    pub parse_block_errors: Vec<String>,
    pub round_trip: RoundTrip,
}

#[derive(Debug)]
pub struct MineSummary {
    pub run_dir: PathBuf,
    pub manifest: Manifest,
    pub counts: CountsTable,
}

/// The `mine` command: runs the pipeline from config and writes the run
/// directory.
pub fn mine(cfg: &RunConfig) -> Result<MineSummary> {
    cfg.validate()?;
    let mut loader = Loader::new(cfg.load);
    let mut inputs = Vec::new();
    for input in &cfg.inputs {
        loader.load(&input.path, &input.source)?;
        inputs.push(digest_file(&input.path)?);
    }
    let corpus = loader.finish();

    let mut parse_inputs = Vec::new();
    let mut parse_block_errors = Vec::new();
    let annotator;
    let index;
    let parses: &dyn ParseSource = match &cfg.parses {
        ParseSourceConfig::Files(files) => {
            let mut sentences = Vec::new();
            for f in files {
                let pf = read_parses(f)?;
                parse_block_errors
                    .extend(pf.errors.iter().map(|e| format!("{}: {e}", f.display())));
                sentences.extend(pf.sentences);
                parse_inputs.push(digest_file(f)?);
            }
            index = ParseIndex::new(sentences);
            &index
        }
        ParseSourceConfig::Service(acfg) => {
            annotator = AnnotatorClient::new(acfg.clone());
            &annotator
        }
    };
    let scorer = build_scorer(&cfg.scorer, cfg.retry);
    let out = mine_documents(&corpus.documents, parses, scorer.as_ref(), cfg)?;
    if !out.counts.is_consistent() {
        return Err(Error::stage("tally", "counts table is inconsistent"));
    }
    let round_trip = check_round_trip(&out.accepted, &corpus.documents);
    if !round_trip.failed.is_empty() {
        return Err(Error::stage(
            "round-trip",
            format!(
                "records do not match their spans: {}",
                round_trip.failed.join(", ")
            ),
        ));
    }

    let run = RunDir::create(&cfg.out_dir)?;
    write_records(
        &run,
        store::RECORDS,
        &out.accepted,
        Some(cfg.scorer.threshold),
    )?;
    if cfg.emit_candidates {
        write_records(&run, store::CANDIDATES, &out.candidates, None)?;
    }
    let referenced: std::collections::BTreeSet<&str> = if cfg.emit_candidates {
        &out.candidates
    } else {
        &out.accepted
    }
    .iter()
    .map(|r| r.doc_id.as_str())
    .collect();
    for doc in corpus
        .documents
        .iter()
        .filter(|d| referenced.contains(d.doc_id()))
    {
        run.write_document(doc)?;
    }
    let conllu: String = out
        .accepted_parses
        .iter()
        .map(ParsedSentence::to_conllu)
        .collect();
    let path = run.path(store::PARSES);
    fs::write(&path, conllu).map_err(|e| Error::io(path, e))?;
    run.write_counts(&out.counts)?;
    reports::write_stats(&run, &out.accepted, &reports::StatsOptions::default())?;

    let mut tallies = out.tallies.clone();
    for e in &corpus.errors {
        tallies.bump(&format!("record-{}", e.reason.as_str()));
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        inputs,
        parse_inputs,
        documents: corpus.documents.len(),
        candidates: out.candidates.len(),
        accepted: out.accepted.len(),
        tallies,
        record_errors: corpus.errors,
        parse_block_errors,
        round_trip,
    };
    store::write_json(&run.path(store::MANIFEST), &manifest)?;
    Ok(MineSummary {
        run_dir: run.root().to_path_buf(),
        manifest,
        counts: out.counts,
    })
}

fn write_records(
    run: &RunDir,
    name: &str,
    records: &[MGenRecord],
    threshold: Option<f64>,
) -> Result<()> {
    let path = run.path(name);
    let file = create_file(&path)?;
    let mut sink = match threshold {
        Some(t) => RecordSink::accepted(file, t),
        None => RecordSink::unfiltered(file),
    };
    for r in records {
        sink.emit(r).map_err(|e| match e {
            store::EmitError::Io(io) => Error::io(&path, io),
            invariant => Error::stage("emit", invariant),
        })?;
    }
    sink.finish().map_err(|e| Error::io(&path, e))?;
    Ok(())
}
