#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use genmine::config::{InputSpec, ParseSourceConfig, RunConfig};
use genmine::core::{ParsedSentence, Token, Upos};
use genmine::parses::parse_conllu;

pub const SOURCES: [&str; 5] = ["refinedweb", "pile", "slimpajama", "arxiv", "pes2o"];

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn corpus_dir() -> PathBuf {
    fixtures().join("corpus")
}

/// Mining config over the fixture corpus and its parse file.
pub fn fixture_config(out: &Path, workers: usize) -> RunConfig {
    let inputs = SOURCES
        .iter()
        .map(|s| InputSpec {
            path: corpus_dir().join(format!("{s}.jsonl")),
            source: s.parse().unwrap(),
        })
        .collect();
    let mut cfg = RunConfig::new(
        inputs,
        ParseSourceConfig::Files(vec![corpus_dir().join("parses.conllu")]),
        out,
    );
    cfg.workers = workers;
    cfg
}

/// Treebank sentences paired with their hand-written expectation
/// (`pass` or a failure reason).
pub fn treebank() -> Vec<(ParsedSentence, String)> {
    let text = std::fs::read_to_string(fixtures().join("treebank.conllu")).unwrap();
    let expects: Vec<String> = text
        .lines()
        .filter_map(|l| l.strip_prefix("# expect = "))
        .map(str::to_string)
        .collect();
    let file = parse_conllu(&text);
    assert!(
        file.errors.is_empty(),
        "treebank has bad blocks: {:?}",
        file.errors
    );
    assert_eq!(file.sentences.len(), expects.len());
    file.sentences.into_iter().zip(expects).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Pass { subject: u32, verb: u32 },
    Fail(&'static str),
}

fn is_root_child(t: &Token, root: u32) -> bool {
    t.head == root
}

fn c1(t: &Token, root: u32) -> bool {
    (t.deprel == "nsubj" || t.deprel == "nsubj:pass")
        && is_root_child(t, root)
        && (t.upos == Upos::Noun || t.upos == Upos::Propn)
        && t.feats.get("Number") == Some("Plur")
}

fn c2(v: &Token, tokens: &[Token], root: &Token) -> bool {
    let is_marker =
        |t: &Token| is_root_child(t, root.index) && (t.deprel == "cop" || t.deprel == "aux:pass");
    let markers: Vec<u32> = tokens
        .iter()
        .filter(|t| is_marker(t))
        .map(|t| t.index)
        .collect();
    match markers.iter().min() {
        Some(&first) => v.index == first,
        None => v.index == root.index && (v.upos == Upos::Verb || v.upos == Upos::Aux),
    }
}

fn c3(v: &Token) -> bool {
    let f = &v.feats;
    f.get("Tense") == Some("Pres")
        && f.get("Mood") == Some("Ind")
        && f.get("Number") == Some("Plur")
        && f.get("Person") == Some("3")
}

/// Brute force over every (subject, verb) token pair.
pub fn oracle(parsed: &ParsedSentence) -> OracleVerdict {
    let tokens = parsed.tokens();
    let root = tokens.iter().find(|t| t.head == 0).expect("one root");
    let mut any_c1 = false;
    let mut any_c2 = false;
    let mut passing = Vec::new();
    for s in tokens {
        for v in tokens {
            let (a, b) = (c1(s, root.index), c2(v, tokens, root));
            any_c1 |= a;
            any_c2 |= b;
            if a && b && c3(v) {
                passing.push((s.index, v.index));
            }
        }
    }
    if !any_c1 {
        return OracleVerdict::Fail("no-plural-subject");
    }
    if !any_c2 {
        return OracleVerdict::Fail("bad-root");
    }
    match passing.into_iter().min() {
        Some((subject, verb)) => OracleVerdict::Pass { subject, verb },
        None => OracleVerdict::Fail("bad-verb-feats"),
    }
}

#[derive(Debug, Clone)]
pub struct GoldenRow {
    pub doc_id: String,
    pub sent_index: u32,
    pub source: String,
    pub sentence: String,
    pub expected: String,
}

pub fn golden() -> Vec<GoldenRow> {
    let text = std::fs::read_to_string(corpus_dir().join("golden.tsv")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            GoldenRow {
                doc_id: f[0].into(),
                sent_index: f[1].parse().unwrap(),
                source: f[2].into(),
                sentence: f[3].into(),
                expected: f[4].into(),
            }
        })
        .collect()
}

/// The (length, sentence) rows of the length-example fixture.
pub fn length_examples() -> Vec<(usize, String)> {
    let text = std::fs::read_to_string(fixtures().join("length_examples.tsv")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| {
            let (n, s) = l.split_once('\t').unwrap();
            (n.parse().unwrap(), s.to_string())
        })
        .collect()
}

/// Runs `router` on a loopback port in a background thread and returns the
/// base URL. The server lives until the test process exits.
pub fn spawn_server(router: axum::Router) -> String {
    let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

/// A loopback URL with nothing listening on it.
pub fn dead_url() -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}")
}

pub fn http_get(url: &str) -> (u16, String) {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let mut r = agent.get(url).call().unwrap();
    (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
}

pub fn http_post(url: &str, body: &str) -> (u16, String) {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let mut r = agent
        .post(url)
        .header("content-type", "application/json")
        .send(body)
        .unwrap();
    (r.status().as_u16(), r.body_mut().read_to_string().unwrap())
}
