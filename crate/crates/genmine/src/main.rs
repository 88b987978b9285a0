use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use genmine::annotator::AnnotatorConfig;
use genmine::config::{ConfigFile, InputSpec, ParseSourceConfig, RunConfig};
use genmine::core::agreement::sample_batch;
use genmine::core::scoring::{parse_word_list, ScorerKind};
use genmine::core::ScorerConfig;
use genmine::reports::{self, DiversityConfig, StatsOptions};
use genmine::scorer::apply_env_override;
use genmine::service::{self, Annotation};
use genmine::store::{self, RunDir};
use genmine::{pipeline, Error, Result};

#[derive(Parser)]
#[command(
    name = "genmine",
    version,
    about = "Mine generic and quantified sentences from document corpora"
)]
struct Cli {
    /// Optional key = value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the extraction pipeline over JSONL corpora.
    Mine(MineArgs),
    /// Length, common-word and source statistics for a run.
    Stats(StatsArgs),
    /// Diversity measures for a run.
    Diversity(DiversityArgs),
    /// Serve a sampled batch for human labeling.
    AnnotateServe(ServeArgs),
    /// Print a seeded sample of record ids.
    Sample(SampleArgs),
}

#[derive(clap::Args)]
struct MineArgs {
    /// Corpus file as SOURCE=PATH, or PATH named after its source. Repeatable.
    #[arg(long = "input")]
    inputs: Vec<String>,
    /// CoNLL-U file with parses of the corpus sentences. Repeatable.
    #[arg(long = "parses")]
    parses: Vec<PathBuf>,
    /// Annotation service base URL, used instead of parse files.
    #[arg(long)]
    parser_url: Option<String>,
    /// Scoring service base URL; selects the external scorer.
    #[arg(long)]
    scorer_url: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    emit_candidates: bool,
    #[arg(long)]
    inline_context: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_doc_bytes: Option<usize>,
    /// Service requests in flight at once.
    #[arg(long)]
    max_in_flight: Option<usize>,
    #[arg(long)]
    retries: Option<u32>,
    /// Parse cache capacity, in sentences.
    #[arg(long)]
    cache_entries: Option<usize>,
}

#[derive(clap::Args)]
struct StatsArgs {
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    top_k: Option<usize>,
    /// Plain-text stopword list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(clap::Args)]
struct DiversityArgs {
    #[arg(long)]
    run: Option<PathBuf>,
    /// JSONL file of {"id": record_id, "vec": [...]}.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    groups: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    token_budget: Option<usize>,
    #[arg(long)]
    lemma_budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct ServeArgs {
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    host: Option<String>,
    /// HTML page to serve at / in place of the built-in one.
    #[arg(long)]
    ui: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SampleArgs {
    #[arg(long)]
    run: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Flag value, else config-file value, else default.
fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str, default: T) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.parse_value(key)?.unwrap_or(default)),
    }
}

fn pick_opt<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.parse_value(key),
    }
}

fn pick_flag(flag: bool, file: &ConfigFile, key: &str) -> Result<bool> {
    Ok(flag || file.flag(key)?.unwrap_or(false))
}

fn required_run(flag: Option<PathBuf>, file: &ConfigFile) -> Result<PathBuf> {
    pick_opt(flag, file, "run")?.ok_or_else(|| Error::Config("--run is required".into()))
}

fn mine_config(args: MineArgs, file: &ConfigFile) -> Result<RunConfig> {
    let raw_inputs = if args.inputs.is_empty() {
        file.get_all("input").to_vec()
    } else {
        args.inputs
    };
    let inputs = raw_inputs
        .iter()
        .map(|s| {
            s.parse::<InputSpec>()
                .unwrap_or_else(|never| match never {})
        })
        .collect();
    let parse_files = if args.parses.is_empty() {
        file.get_all("parses").iter().map(PathBuf::from).collect()
    } else {
        args.parses
    };
    let max_in_flight = pick(args.max_in_flight, file, "max-in-flight", 4)?;
    let retries = pick_opt(args.retries, file, "retries")?;
    let parses = match pick_opt(args.parser_url, file, "parser-url")? {
        Some(url) => {
            let mut a = AnnotatorConfig::new(url);
            a.max_in_flight = max_in_flight;
            a.cache_entries = pick(args.cache_entries, file, "cache-entries", a.cache_entries)?;
            if let Some(r) = retries {
                a.retry.max_retries = r;
            }
            ParseSourceConfig::Service(a)
        }
        None => ParseSourceConfig::Files(parse_files),
    };
    let out = pick_opt(args.out, file, "out")?
        .ok_or_else(|| Error::Config("--out is required".into()))?;
    let mut cfg = RunConfig::new(inputs, parses, out);
    cfg.scorer = match pick_opt(args.scorer_url, file, "scorer-url")? {
        Some(url) => ScorerConfig::external(url),
        None => ScorerConfig::default(),
    };
    apply_env_override(&mut cfg.scorer);
    cfg.scorer.threshold = pick(args.threshold, file, "threshold", cfg.scorer.threshold)?;
    cfg.scorer.batch_size = pick(args.batch_size, file, "batch-size", cfg.scorer.batch_size)?;
    cfg.emit_candidates = pick_flag(args.emit_candidates, file, "emit-candidates")?;
    cfg.inline_context = pick_flag(args.inline_context, file, "inline-context")?;
    cfg.workers = pick(args.workers, file, "workers", 1)?;
    cfg.seed = pick(args.seed, file, "seed", 0)?;
    cfg.load.max_doc_bytes = pick(
        args.max_doc_bytes,
        file,
        "max-doc-bytes",
        cfg.load.max_doc_bytes,
    )?;
    cfg.max_in_flight = max_in_flight;
    if let Some(r) = retries {
        cfg.retry.max_retries = r;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Mine(args) => {
            let cfg = mine_config(args, &file)?;
            let summary = pipeline::mine(&cfg)?;
            print!("{}", summary.counts.render());
            let m = &summary.manifest;
            println!(
                "{} documents, {} candidates, {} accepted -> {}",
                m.documents,
                m.candidates,
                m.accepted,
                summary.run_dir.display()
            );
            if cfg.scorer.kind == ScorerKind::ExternalService {
                println!(
                    "scored by {}",
                    cfg.scorer.endpoint.as_deref().unwrap_or_default()
                );
            }
        }
        Command::Stats(args) => {
            let run = required_run(args.run, &file)?;
            let mut opts = StatsOptions {
                top_k: pick(args.top_k, &file, "top-k", 50)?,
                ..StatsOptions::default()
            };
            if let Some(p) = pick_opt(args.stopwords, &file, "stopwords")? {
                opts.stopwords = parse_word_list(&read(&p)?);
            }
            let report = reports::stats(&run, &opts)?;
            print!("{}", reports::render_stats(&report));
        }
        Command::Diversity(args) => {
            let run = required_run(args.run, &file)?;
            let d = DiversityConfig::default();
            let cfg = DiversityConfig {
                groups: pick(args.groups, &file, "groups", d.groups)?,
                group_size: pick(args.group_size, &file, "group-size", d.group_size)?,
                token_budget: pick(args.token_budget, &file, "token-budget", d.token_budget)?,
                lemma_budget: pick(args.lemma_budget, &file, "lemma-budget", d.lemma_budget)?,
                seed: pick(args.seed, &file, "seed", d.seed)?,
                n_values: d.n_values,
            };
            let embeddings = pick_opt(args.embeddings, &file, "embeddings")?;
            let report = reports::diversity(&run, embeddings.as_deref(), &cfg)?;
            print!("{}", reports::render_diversity(&report));
        }
        Command::AnnotateServe(args) => {
            let run = required_run(args.run, &file)?;
            let n = pick(args.n, &file, "n", 300)?;
            let seed = pick(args.seed, &file, "seed", 17)?;
            let port = pick(args.port, &file, "port", 8080)?;
            let host = pick(args.host, &file, "host", "127.0.0.1".to_string())?;
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| Error::Config(format!("bad address {host}:{port}: {e}")))?;
            let mut state = Annotation::open(&run, n, seed)?;
            if let Some(ui) = pick_opt(args.ui, &file, "ui")? {
                state = state.with_ui(read(&ui)?);
            }
            println!(
                "serving {} items on http://{addr}/ (labels in {})",
                state.batch().len(),
                state.log_path().display()
            );
            let rt =
                tokio::runtime::Runtime::new().map_err(|e| Error::stage("annotate-serve", e))?;
            rt.block_on(service::serve(Arc::new(state), addr))?;
        }
        Command::Sample(args) => {
            let run = RunDir::new(required_run(args.run, &file)?);
            let n = pick(args.n, &file, "n", 300)?;
            let seed = pick(args.seed, &file, "seed", 17)?;
            let records = run.read_records(store::RECORDS)?;
            let ids: Vec<&str> = records.iter().map(|r| r.record_id.as_str()).collect();
            for id in sample_batch(&ids, n, seed).map_err(|e| Error::stage("sample", e))? {
                println!("{id}");
            }
        }
    }
    Ok(())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("genmine: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
