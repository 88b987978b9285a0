//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

mod support;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use genmine::core::agreement::agreement;
use genmine::core::analysis::{
    distinct_n, group_diversity, head_lemmas, length_stats, word_count, WordTokenizer,
};
use genmine::core::conllu::{read_blocks, ReadOptions};
use genmine::core::filters::{is_bare_plural, prefilter, QuantifierPosition};
use genmine::core::scoring::{accept, strip_quantifier};
use genmine::core::{
    GenLabel, GenericityScore, HeuristicScorer, Judgment, LabelBook, LabelKind, MGenRecord,
    ParsedSentence, Quantifier, QuantifierInventory, ScorerConfig,
};
use genmine::corpus::Loader;
use genmine::parses::{read_parses, ParseIndex};
use genmine::pipeline::{self, mine_documents};
use genmine::service::{self, Annotation, BatchItem};
use genmine::store::{self, RunDir};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, TestRunner};
use support::{oracle, OracleVerdict};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Check {
    let bank = support::treebank();
    ensure(bank.len() >= 60, || {
        format!("only {} treebank sentences", bank.len())
    })?;
    let start = Instant::now();
    let mut agree = 0;
    for (parsed, _) in &bank {
        let got = match is_bare_plural(parsed) {
            r if r.passed() => OracleVerdict::Pass {
                subject: r.subject_index().unwrap(),
                verb: r.verb_index().unwrap(),
            },
            r => OracleVerdict::Fail(r.fail_reason().unwrap().as_str()),
        };
        if got == oracle(parsed) {
            agree += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(agree == bank.len(), || {
        format!("{agree}/{} agree with the oracle", bank.len())
    })?;
    for (parsed, expect) in &bank {
        let verdict = match oracle(parsed) {
            OracleVerdict::Pass { .. } => "pass",
            OracleVerdict::Fail(r) => r,
        };
        ensure(verdict == expect, || {
            format!(
                "{:?}: oracle says {verdict}, hand label {expect}",
                parsed.text
            )
        })?;
    }
    let expect_of = |text: &str| {
        bank.iter()
            .find(|(p, _)| p.text.as_deref() == Some(text))
            .map(|(_, e)| e.as_str())
    };
    for (text, want) in [
        ("Tigers have stripes.", true),
        ("Tigers are in the front lawn.", true),
        ("A tiger has stripes.", false),
        ("Tigers had stripes.", false),
    ] {
        let e = expect_of(text).ok_or_else(|| format!("{text:?} missing from treebank"))?;
        ensure((e == "pass") == want, || format!("{text:?} expected {e}"))?;
    }
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!("{agree}/{} sentences, {elapsed:?}", bank.len()))
}

struct FixtureRun {
    candidates: Vec<MGenRecord>,
}

fn fixture_candidates() -> Result<FixtureRun, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = support::fixture_config(dir.path(), 2);
    let mut loader = Loader::new(cfg.load);
    for input in &cfg.inputs {
        loader
            .load(&input.path, &input.source)
            .map_err(|e| e.to_string())?;
    }
    let corpus = loader.finish();
    let parses =
        read_parses(&support::corpus_dir().join("parses.conllu")).map_err(|e| e.to_string())?;
    let index = ParseIndex::new(parses.sentences);
    let out = mine_documents(&corpus.documents, &index, &HeuristicScorer::default(), &cfg)
        .map_err(|e| e.to_string())?;
    Ok(FixtureRun {
        candidates: out.candidates,
    })
}

fn quantifier_handling() -> Check {
    let run = fixture_candidates()?;
    let find = |s: &str| {
        run.candidates
            .iter()
            .find(|r| r.sentence == s)
            .ok_or_else(|| format!("{s:?} is not a candidate"))
    };
    let all = find("All tigers have stripes.")?;
    ensure(
        all.label
            == GenLabel::Quantified {
                quantifier: Quantifier::All,
                position: QuantifierPosition::Initial,
            },
        || format!("all: label {:?}", all.label),
    )?;
    ensure(
        all.scored_text.trim_end_matches('.') == "tigers have stripes",
        || format!("all: scored {:?}", all.scored_text),
    )?;
    let bare =
        strip_quantifier("All tigers have stripes", Quantifier::All).map_err(|e| e.to_string())?;
    ensure(bare == "tigers have stripes", || {
        format!("strip gave {bare:?}")
    })?;
    let normally = find("Tigers are normally striped.")?;
    ensure(
        normally.label.quantifier() == Some(Quantifier::Normally),
        || format!("normally: label {:?}", normally.label),
    )?;
    let embedded = find("Tigers hunt prey that usually hides in the grass.")?;
    ensure(embedded.label == GenLabel::Generic, || {
        format!("embedded: label {:?}", embedded.label)
    })?;
    Ok("all/initial scored \"tigers have stripes\", normally, embedded usually -> GEN".into())
}

fn threshold_boundary() -> Check {
    let cfg = ScorerConfig::default();
    let s = |v| GenericityScore::new(v, "t").unwrap();
    ensure(cfg.threshold == 0.8, || {
        format!("default threshold {}", cfg.threshold)
    })?;
    ensure(accept(&s(0.8), &cfg), || "0.8 rejected".into())?;
    ensure(!accept(&s(0.79), &cfg), || "0.79 accepted".into())?;
    ensure(!accept(&s(0.799_999_999_9), &cfg), || {
        "0.7999999999 accepted".into()
    })?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut run_cfg = support::fixture_config(&dir.path().join("run"), 2);
    run_cfg.emit_candidates = true;
    let summary = pipeline::mine(&run_cfg).map_err(|e| e.to_string())?;
    let run = RunDir::new(&summary.run_dir);
    let records = run
        .read_records(store::RECORDS)
        .map_err(|e| e.to_string())?;
    let candidates = run
        .read_records(store::CANDIDATES)
        .map_err(|e| e.to_string())?;
    let low = records
        .iter()
        .filter(|r| r.score.value < run_cfg.scorer.threshold)
        .count();
    ensure(low == 0, || {
        format!("{low} accepted records below threshold")
    })?;
    let below_in_candidates = candidates.iter().filter(|r| r.score.value < 0.8).count();
    ensure(below_in_candidates > 0, || {
        "fixture has no below-threshold candidates".into()
    })?;
    Ok(format!(
        "0.8 in, 0.79 out; {} records scanned, {below_in_candidates} rejected candidates kept out",
        records.len()
    ))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for workers in [1, 8] {
        let mut cfg = support::fixture_config(&dir.path().join(format!("w{workers}")), workers);
        cfg.emit_candidates = true;
        cfg.scorer.batch_size = 3;
        runs.push(pipeline::mine(&cfg).map_err(|e| e.to_string())?);
    }
    for name in [
        store::RECORDS,
        store::CANDIDATES,
        store::COUNTS_JSON,
        store::COUNTS_TXT,
        store::PARSES,
    ] {
        let a = std::fs::read(runs[0].run_dir.join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(runs[1].run_dir.join(name)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{name} differs between 1 and 8 workers"))?;
    }
    ensure(runs[0].counts == runs[1].counts, || "counts differ".into())?;
    let counts = &runs[0].counts;
    for label in genmine::core::LabelKey::all() {
        ensure(
            counts.generalizations(label) <= counts.candidates(label),
            || format!("{label:?}: more generalizations than candidates"),
        )?;
    }
    ensure(counts.is_consistent(), || {
        "counts table inconsistent".into()
    })?;
    let records =
        std::fs::read_to_string(runs[0].run_dir.join(store::RECORDS)).map_err(|e| e.to_string())?;
    Ok(format!(
        "byte-identical outputs, {} records",
        records.lines().count()
    ))
}

/// Mean pairwise cosine similarity, negated, computed directly.
fn cossim_reference(vectors: &[Vec<f64>]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut sum = 0.0;
    let mut pairs = 0.0;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
            sum += dot / (norm(&vectors[i]) * norm(&vectors[j]));
            pairs += 1.0;
        }
    }
    -sum / pairs
}

fn cossim_checks() -> Check {
    let d = |g: &[Vec<f64>]| group_diversity(g).ok_or("undefined diversity".to_string());
    let unit = vec![0.6, 0.8, 0.0];
    let same = d(&[unit.clone(), unit.clone(), unit.clone()])?;
    ensure((same + 1.0).abs() <= 1e-9, || {
        format!("identical vectors: {same}")
    })?;
    let ortho = d(&[vec![1.0, 0.0], vec![0.0, 1.0]])?;
    ensure(ortho.abs() <= 1e-9, || format!("orthonormal pair: {ortho}"))?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let three = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![h, h]];
    let got = d(&three)?;
    let reference = cossim_reference(&three);
    ensure((got - reference).abs() <= 1e-12, || {
        format!("3-vector: {got} vs reference {reference}")
    })?;
    ensure((got + 0.4714).abs() <= 1e-3, || format!("3-vector: {got}"))?;
    let group = vec![
        vec![0.3, -1.2, 0.5],
        vec![2.0, 0.1, 0.0],
        vec![-0.7, 0.4, 0.9],
        vec![0.2, 0.2, -3.0],
    ];
    let base = d(&group)?;
    let mut perms = 0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for e in 0..4 {
                    let idx = [a, b, c, e];
                    if idx.iter().collect::<BTreeSet<_>>().len() < 4 {
                        continue;
                    }
                    let p: Vec<Vec<f64>> = idx.iter().map(|&i| group[i].clone()).collect();
                    let v = d(&p)?;
                    ensure(v.to_bits() == base.to_bits(), || {
                        format!("permutation {idx:?}: {v} vs {base}")
                    })?;
                    perms += 1;
                }
            }
        }
    }
    Ok(format!(
        "-1, 0, {got:.4}; {perms} permutations bit-identical"
    ))
}

fn distinct_reference(sentences: &[String], n: usize) -> usize {
    let mut seen = BTreeSet::new();
    for s in sentences {
        let toks: Vec<String> = s
            .split_whitespace()
            .map(|w| {
                w.trim_matches(|c: char| !c.is_alphanumeric())
                    .to_lowercase()
            })
            .filter(|w| !w.is_empty())
            .collect();
        for w in toks.windows(n) {
            seen.insert(w.to_vec());
        }
    }
    seen.len()
}

fn distinct_oracle() -> Check {
    let sentence = proptest::collection::vec("[a-f]{1,2}", 0..50).prop_map(|w| w.join(" "));
    let corpus = proptest::collection::vec(sentence, 0..200);
    let mut runner = TestRunner::new(Config {
        cases: 256,
        ..Config::default()
    });
    let trials = runner.config().cases;
    let mut max_tokens = 0;
    for _ in 0..trials {
        let sentences = corpus
            .new_tree(&mut runner)
            .map_err(|e| e.to_string())?
            .current();
        let report = distinct_n(&sentences, &WordTokenizer, &[1, 2, 3], None);
        max_tokens = max_tokens.max(report.tokens_consumed);
        ensure(report.tokens_consumed <= 10_000, || {
            "corpus over 10k tokens".into()
        })?;
        for n in 1..=3 {
            let want = distinct_reference(&sentences, n);
            ensure(report.counts[&n] == want, || {
                format!("distinct-{n}: {} vs oracle {want}", report.counts[&n])
            })?;
        }
    }
    let ab = distinct_n(["a b", "b a"], &WordTokenizer, &[2], None);
    ensure(ab.counts[&2] == 2, || {
        format!("\"a b\"/\"b a\" distinct-2 = {}", ab.counts[&2])
    })?;
    Ok(format!(
        "{trials} random corpora (up to {max_tokens} tokens), \"a b\"/\"b a\" -> 2"
    ))
}

const BEES: &str = "# doc_id = example
# sent_index = 0
# text = Bees in the forests of Catalonia feed on lavender flowers, giving their honey a distinctive taste.
1\tBees\tbee\tNOUN\t_\tNumber=Plur\t7\tnsubj\t_\t_
2\tin\tin\tADP\t_\t_\t4\tcase\t_\t_
3\tthe\tthe\tDET\t_\tDefinite=Def|PronType=Art\t4\tdet\t_\t_
4\tforests\tforest\tNOUN\t_\tNumber=Plur\t1\tnmod\t_\t_
5\tof\tof\tADP\t_\t_\t6\tcase\t_\t_
6\tCatalonia\tCatalonia\tPROPN\t_\tNumber=Sing\t4\tnmod\t_\t_
7\tfeed\tfeed\tVERB\t_\tMood=Ind|Number=Plur|Person=3|Tense=Pres|VerbForm=Fin\t0\troot\t_\t_
8\ton\ton\tADP\t_\t_\t10\tcase\t_\t_
9\tlavender\tlavender\tNOUN\t_\tNumber=Sing\t10\tcompound\t_\t_
10\tflowers\tflower\tNOUN\t_\tNumber=Plur\t7\tobl\t_\tSpaceAfter=No
11\t,\t,\tPUNCT\t_\t_\t12\tpunct\t_\t_
12\tgiving\tgive\tVERB\t_\tVerbForm=Ger\t7\tadvcl\t_\t_
13\ttheir\ttheir\tPRON\t_\tNumber=Plur|Person=3|Poss=Yes|PronType=Prs\t14\tnmod:poss\t_\t_
14\thoney\thoney\tNOUN\t_\tNumber=Sing\t12\tiobj\t_\t_
15\ta\ta\tDET\t_\tDefinite=Ind|PronType=Art\t17\tdet\t_\t_
16\tdistinctive\tdistinctive\tADJ\t_\tDegree=Pos\t17\tamod\t_\t_
17\ttaste\ttaste\tNOUN\t_\tNumber=Sing\t12\tobj\t_\tSpaceAfter=No
18\t.\t.\tPUNCT\t_\t_\t7\tpunct\t_\t_
";

fn head_lemma_example() -> Check {
    let parsed: ParsedSentence = read_blocks(BEES, ReadOptions::default())
        .next()
        .ok_or("no block")?
        .map_err(|e| e.to_string())?;
    let h = head_lemmas([&parsed], None);
    let all: BTreeSet<String> = h
        .subjects
        .iter()
        .chain(&h.verbs)
        .chain(&h.objects)
        .cloned()
        .collect();
    let want: BTreeSet<String> = ["bee", "feed", "flower"].map(String::from).into();
    ensure(all == want, || format!("got {all:?}"))?;
    ensure(
        h.counts().subject == 1 && h.counts().verb == 1 && h.counts().object == 1,
        || format!("{:?}", h.counts()),
    )?;
    Ok("{bee, feed, flower}".into())
}

fn length_checks() -> Check {
    let n = word_count("Words have power.");
    ensure(n == 3, || format!("word_count = {n}"))?;
    let rows = support::length_examples();
    ensure(rows.len() == 23, || {
        format!("{} length examples", rows.len())
    })?;
    for (len, s) in &rows {
        ensure(word_count(s) == *len, || {
            format!("{s:?}: {} words, listed {len}", word_count(s))
        })?;
    }
    let mut lens: Vec<usize> = rows.iter().map(|(l, _)| *l).collect();
    lens.sort_unstable();
    let mean = lens.iter().sum::<usize>() as f64 / lens.len() as f64;
    let median = lens[lens.len() / 2];
    let stats = length_stats(rows.iter().map(|(_, s)| s.as_str()));
    ensure(stats.mean == Some(mean), || {
        format!("mean {:?} vs {mean}", stats.mean)
    })?;
    ensure(stats.median == Some(median), || {
        format!("median {:?} vs {median}", stats.median)
    })?;
    ensure(mean == 14.0 && median == 14, || {
        format!("hand values {mean}/{median}")
    })?;
    Ok(format!(
        "word_count 3; mean {mean}, median {median} over {} sentences",
        rows.len()
    ))
}

/// Two annotators over 300 records: 246 agreements, with label shares
/// 523 Generic, 45 Unclear and 32 Particular out of 600.
fn reference_book() -> Vec<Judgment> {
    use LabelKind::{Generic as G, Particular as P, Unclear as U};
    let mut pairs = Vec::new();
    pairs.extend(std::iter::repeat_n((G, G), 235));
    pairs.extend(std::iter::repeat_n((U, U), 5));
    pairs.extend(std::iter::repeat_n((P, P), 6));
    pairs.extend(std::iter::repeat_n((G, U), 34));
    pairs.extend(std::iter::repeat_n((G, P), 19));
    pairs.extend(std::iter::repeat_n((U, P), 1));
    pairs
        .into_iter()
        .enumerate()
        .flat_map(|(i, (a, b))| {
            let j = |annotator: &str, label| Judgment {
                record_id: format!("r{i:03}"),
                annotator_id: annotator.into(),
                label,
            };
            [j("a1", a), j("a2", b)]
        })
        .collect()
}

fn agreement_checks() -> Check {
    let judgments = reference_book();
    let report = agreement(&judgments.iter().collect::<LabelBook>());
    ensure(report.n_double_labeled == 300, || {
        format!("{} doubly labeled", report.n_double_labeled)
    })?;
    ensure(report.percent_agreement == Some(82.0), || {
        format!("agreement {:?}", report.percent_agreement)
    })?;
    let share = |l| report.distribution[&l];
    for (label, want) in [
        (LabelKind::Generic, 87.17),
        (LabelKind::Unclear, 7.5),
        (LabelKind::Particular, 5.33),
    ] {
        ensure((share(label) - want).abs() < 0.005, || {
            format!("{label:?} share {}", share(label))
        })?;
    }

    let same: LabelBook = judgments
        .iter()
        .filter(|j| j.annotator_id == "a1")
        .flat_map(|j| {
            [
                j.clone(),
                Judgment {
                    annotator_id: "a2".into(),
                    ..j.clone()
                },
            ]
        })
        .collect::<Vec<_>>()
        .iter()
        .collect();
    ensure(agreement(&same).percent_agreement == Some(100.0), || {
        "identical logs".into()
    })?;
    let disjoint: Vec<Judgment> = (0..30)
        .flat_map(|i| {
            let id = format!("d{i}");
            [
                Judgment {
                    record_id: id.clone(),
                    annotator_id: "a1".into(),
                    label: LabelKind::Generic,
                },
                Judgment {
                    record_id: id,
                    annotator_id: "a2".into(),
                    label: LabelKind::Particular,
                },
            ]
        })
        .collect();
    ensure(
        agreement(&disjoint.iter().collect()).percent_agreement == Some(0.0),
        || "disjoint logs".into(),
    )?;

    let restart = service_restart()?;
    Ok(format!(
        "246/300 -> 82.0%, shares 87.17/7.5/5.33, identical 100%, disjoint 0%; {restart}"
    ))
}

fn service_restart() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join(store::LABELS);
    let batch: Vec<BatchItem> = (0..10)
        .map(|i| BatchItem {
            record_id: format!("doc-{i}#0"),
            sentence: format!("Tigers have {i} stripes."),
            context_excerpt: String::new(),
        })
        .collect();
    let first =
        Arc::new(Annotation::with_batch(batch.clone(), log.clone()).map_err(|e| e.to_string())?);
    let url = support::spawn_server(service::router(first.clone()));
    let labels = ["Generic", "Particular", "Unclear"];
    for (i, item) in batch.iter().enumerate() {
        for (k, annotator) in ["a1", "a2"].iter().enumerate() {
            let label = labels[(i * (k + 1)) % 3];
            let body = format!(
                r#"{{"record_id":"{}","annotator_id":"{annotator}","label":"{label}"}}"#,
                item.record_id
            );
            let (status, _) = support::http_post(&format!("{url}/api/label"), &body);
            ensure(status == 200, || format!("label POST returned {status}"))?;
        }
    }
    let (status, _) = support::http_post(
        &format!("{url}/api/label"),
        r#"{"record_id":"doc-0#0","annotator_id":"a2","label":"Unclear"}"#,
    );
    ensure(status == 200, || format!("overwrite returned {status}"))?;
    let (_, before) = support::http_get(&format!("{url}/api/report"));
    let restarted = Annotation::with_batch(batch, log.clone()).map_err(|e| e.to_string())?;
    let after = serde_json::to_string(&restarted.report()).map_err(|e| e.to_string())?;
    let before_v: serde_json::Value = serde_json::from_str(&before).map_err(|e| e.to_string())?;
    let after_v: serde_json::Value = serde_json::from_str(&after).map_err(|e| e.to_string())?;
    ensure(before_v == after_v, || {
        format!("report changed across restart: {before} vs {after}")
    })?;
    ensure(first.report() == restarted.report(), || {
        "in-memory reports differ".into()
    })?;
    let lines = std::fs::read_to_string(&log)
        .map_err(|e| e.to_string())?
        .lines()
        .count();
    ensure(lines == 21, || format!("{lines} log lines"))?;
    Ok(format!(
        "restart from {lines}-line log reproduces the report"
    ))
}

fn throughput() -> Check {
    let mut sentences = read_parses(&support::corpus_dir().join("parses.conllu"))
        .map_err(|e| e.to_string())?
        .sentences;
    sentences.extend(support::treebank().into_iter().map(|(p, _)| p));
    let inventory = QuantifierInventory::standard();
    let target = 200_000;
    let mut processed = 0usize;
    let mut passed = 0usize;
    let start = Instant::now();
    while processed < target {
        for s in &sentences {
            if prefilter(s.tokens(), &inventory).is_candidate() && is_bare_plural(s).passed() {
                passed += 1;
            }
        }
        processed += sentences.len();
    }
    let secs = start.elapsed().as_secs_f64();
    let rate = processed as f64 / secs;
    std::hint::black_box(passed);
    ensure(rate >= 20_000.0, || {
        format!("{rate:.0} sentences/s on one core")
    })?;
    Ok(format!(
        "{rate:.0} sentences/s on one core ({processed} sentences)"
    ))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("syntactic-filter oracle equivalence", oracle_equivalence),
        ("quantifier handling", quantifier_handling),
        ("threshold boundary", threshold_boundary),
        ("end-to-end determinism", determinism),
        ("cosine diversity checks", cossim_checks),
        ("distinct-n oracle", distinct_oracle),
        ("head-lemma example", head_lemma_example),
        ("sentence length", length_checks),
        ("agreement arithmetic", agreement_checks),
        ("filter throughput", throughput),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
