//! The `soqal` command line.
//!
//! Every flag can also come from a key-value config file (`key = value` per
//! line, keys are long flag names) given by `--config` or `SOQAL_CONFIG`.
//! Flags on the command line win over the file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::align::align_dataset;
use crate::corpus::{
    default_stopwords, load_corpus, parse_stopwords, AnalyzerConfig, CorpusOptions, DocUnit,
    NgramRange, StemRules,
};
use crate::embedding::WordVectors;
use crate::fusion::{tune_beta, write_json, DevQuestion, FusionConfig};
use crate::metrics::{load_dataset, save_dataset};
use crate::pipeline::{
    evaluate_reader, evaluate_retriever, Pipeline, PipelineConfig, ReaderSpec, RetrievalMethod,
};
use crate::retriever::{
    retrieve_flat, retrieve_hierarchical, EmbeddingRetriever, HierarchicalConfig,
};
use crate::tfidf::{load_index, save_index, IndexBuilder, DEFAULT_HASH_BITS};

pub const CONFIG_ENV: &str = "SOQAL_CONFIG";

#[derive(Debug, Parser)]
#[command(
    name = "soqal",
    version,
    about = "Open-domain Arabic question answering",
    args_override_self = true
)]
struct Cli {
    /// Key-value config file; defaults to $SOQAL_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a TF-IDF index from a JSONL corpus.
    BuildIndex(BuildIndexArgs),
    /// Retrieve documents for a question or every question of a dataset.
    Retrieve(RetrieveArgs),
    /// Answer one question; prints a JSON line.
    Answer(AnswerArgs),
    /// Retriever recall@k sweep.
    EvalRetriever(EvalRetrieverArgs),
    /// Reader-only evaluation on gold paragraphs.
    EvalReader(EvalReaderArgs),
    /// Open-domain evaluation of the full pipeline.
    EvalOpen(EvalOpenArgs),
    /// Grid-search the fusion weight on a dev set.
    TuneBeta(TuneBetaArgs),
    /// Repair answers that no longer occur in their paragraphs.
    Align(AlignArgs),
}

#[derive(Debug, Args)]
struct AnalyzerArgs {
    /// Stopword list (one word per line) replacing the built-in one.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    no_stopwords: bool,
    #[arg(long)]
    no_stem: bool,
}

impl AnalyzerArgs {
    fn config(&self, ngrams: NgramRange) -> Outcome<AnalyzerConfig> {
        let stopwords = if self.no_stopwords {
            Default::default()
        } else if let Some(p) = &self.stopwords {
            parse_stopwords(&read(p)?)
        } else {
            default_stopwords()
        };
        let stem_rules = if self.no_stem {
            StemRules::none()
        } else {
            StemRules::default()
        };
        Ok(AnalyzerConfig {
            stopwords,
            stem_rules,
            ..AnalyzerConfig::default()
        }
        .with_ngrams(ngrams))
    }
}

#[derive(Debug, Args)]
struct BuildIndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// "lo,hi", or "n" for 1..n.
    #[arg(long, default_value = "1,2")]
    ngrams: NgramRange,
    /// log2 of the number of hash bins.
    #[arg(long, default_value_t = DEFAULT_HASH_BITS)]
    hash_bits: u32,
    #[arg(long, default_value = "article")]
    unit: DocUnit,
    #[arg(long, default_value_t = 1)]
    min_paragraph_chars: usize,
    #[command(flatten)]
    analyzer: AnalyzerArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RetrieveMode {
    Flat,
    Hierarchical,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    index: PathBuf,
    /// Needed for hierarchical mode.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    question: Option<String>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "hierarchical")]
    mode: RetrieveMode,
    /// Hits per question (k2 in hierarchical mode).
    #[arg(long, default_value_t = 15)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    k1: usize,
    #[arg(long, default_value = "1,4")]
    stage2_ngrams: NgramRange,
    /// JSONL output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReaderArg {
    Tfidf,
    SlidingWindow,
    Embedding,
    Random,
    External,
}

#[derive(Debug, Args)]
struct ReaderArgs {
    #[arg(long, value_enum, default_value = "tfidf")]
    reader: ReaderArg,
    /// Word vectors for the embedding reader.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Command line of the external reader (split on whitespace).
    #[arg(long)]
    reader_cmd: Option<String>,
    /// Seconds to wait for each external reader response.
    #[arg(long, default_value_t = 60.0)]
    reader_timeout: f64,
}

impl ReaderArgs {
    fn spec(&self) -> Outcome<ReaderSpec> {
        Ok(match self.reader {
            ReaderArg::Tfidf => ReaderSpec::Tfidf,
            ReaderArg::SlidingWindow => ReaderSpec::SlidingWindow,
            ReaderArg::Random => ReaderSpec::Random,
            ReaderArg::Embedding => ReaderSpec::Embedding {
                vectors: self
                    .vectors
                    .clone()
                    .ok_or_else(|| usage("--reader embedding needs --vectors"))?,
            },
            ReaderArg::External => {
                let cmd = self
                    .reader_cmd
                    .as_deref()
                    .ok_or_else(|| usage("--reader external needs --reader-cmd"))?;
                if !(self.reader_timeout > 0.0 && self.reader_timeout.is_finite()) {
                    return Err(usage("--reader-timeout must be positive"));
                }
                ReaderSpec::External {
                    command: cmd.split_whitespace().map(String::from).collect(),
                    timeout: Duration::from_secs_f64(self.reader_timeout),
                }
            }
        })
    }
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    reader: ReaderArgs,
    #[arg(long, default_value_t = 1000)]
    k1: usize,
    #[arg(long, default_value_t = 15)]
    k2: usize,
    #[arg(long, default_value = "1,2")]
    stage1_ngrams: NgramRange,
    #[arg(long, default_value = "1,4")]
    stage2_ngrams: NgramRange,
    /// Documents read per question, external ones included.
    #[arg(long, default_value_t = 10)]
    budget: usize,
    /// JSONL file of externally retrieved documents per question.
    #[arg(long)]
    external_hits: Option<PathBuf>,
    /// Keep only this many paragraphs (4-gram re-ranking) before reading.
    #[arg(long)]
    subselect: Option<usize>,
    #[arg(long, default_value_t = 5)]
    top_n: usize,
}

impl PipelineArgs {
    fn config(&self, beta: f64, seed: u64, workers: usize) -> Outcome<PipelineConfig> {
        Ok(PipelineConfig {
            index: self.index.clone(),
            corpus: self.corpus.clone(),
            hierarchical: HierarchicalConfig {
                stage1_ngrams: self.stage1_ngrams,
                k1: self.k1,
                stage2_ngrams: self.stage2_ngrams,
                k2: self.k2,
            },
            reader: self.reader.spec()?,
            fusion: FusionConfig::new(beta, self.top_n).map_err(|e| usage(&e.to_string()))?,
            external_hits: self.external_hits.clone(),
            budget: self.budget,
            subselect: self.subselect,
            workers,
            seed,
        })
    }
}

#[derive(Debug, Args)]
struct AnswerArgs {
    #[arg(long)]
    question: String,
    #[arg(long)]
    beta: f64,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Unigram,
    Bigram,
    Hierarchical,
    Embedding,
}

#[derive(Debug, Args)]
struct EvalRetrieverArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "unigram,bigram,hierarchical"
    )]
    methods: Vec<MethodArg>,
    #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    k1: usize,
    #[arg(long, default_value_t = DEFAULT_HASH_BITS)]
    hash_bits: u32,
    #[arg(long, default_value = "article")]
    unit: DocUnit,
    /// Word vectors for the embedding method.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// Match answers as raw substrings instead of normalized ones.
    #[arg(long)]
    raw_match: bool,
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    analyzer: AnalyzerArgs,
}

#[derive(Debug, Args)]
struct EvalReaderArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    reader: ReaderArgs,
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalOpenArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    beta: f64,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Top-1 predictions file.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// Top-n predictions file; defaults to the top-1 path with a `.top_n` suffix.
    #[arg(long)]
    predictions_top_n: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TuneBetaArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    grid_step: f64,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
struct AlignArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    stats: Option<PathBuf>,
    #[arg(long, default_value_t = crate::align::DEFAULT_MAX_WORDS)]
    max_words: usize,
}

/// Usage errors exit 1, everything else 2.
enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn usage(msg: &str) -> Failure {
    Failure::Usage(msg.to_string())
}

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("cannot read {}: {e}", path.display())))
}

/// Parses a config file into `(key, value)` pairs.
fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Turns config entries into flags for `subcommand`. Keys no subcommand knows
/// are rejected; keys of other subcommands are ignored.
fn config_flags(entries: &[(String, String)], subcommand: &str) -> Result<Vec<OsString>, String> {
    let root = Cli::command();
    let known = |cmd: &clap::Command, key: &str| {
        cmd.get_arguments()
            .find(|a| a.get_long() == Some(key))
            .cloned()
    };
    let sub = root.find_subcommand(subcommand).cloned();
    let mut flags = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err("config files cannot name another config file".into());
        }
        let arg = sub
            .as_ref()
            .and_then(|s| known(s, key))
            .or_else(|| known(&root, key));
        let Some(arg) = arg else {
            if root.get_subcommands().any(|s| known(s, key).is_some()) {
                continue;
            }
            return Err(format!("unknown config key {key:?}"));
        };
        if arg.get_action().takes_values() {
            flags.push(format!("--{key}").into());
            flags.push(value.into());
        } else {
            match value.as_str() {
                "true" => flags.push(format!("--{key}").into()),
                "false" => {}
                other => {
                    return Err(format!(
                        "config key {key:?} expects true or false, got {other:?}"
                    ))
                }
            }
        }
    }
    Ok(flags)
}

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    std::env::var_os(CONFIG_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

/// Inserts config-file flags right after the subcommand name so that flags
/// given by the user, which come later, override them.
fn with_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let entries = parse_config(&text)?;
    let root = Cli::command();
    let pos = argv
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| root.find_subcommand(a.to_string_lossy().as_ref()).is_some())
        .map(|(i, _)| i);
    let Some(pos) = pos else {
        return Ok(argv);
    };
    let flags = config_flags(&entries, &argv[pos].to_string_lossy())?;
    let mut out = argv[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .try_init();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match with_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    log::info!("effective config: {cli:?}");
    let result = match cli.workers {
        Some(0) => Err(usage("--workers must be at least 1")),
        _ => execute(&cli),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            2
        }
    }
}

fn execute(cli: &Cli) -> Outcome<()> {
    let workers = cli.workers.unwrap_or_else(rayon::current_num_threads);
    match &cli.command {
        Command::BuildIndex(a) => build_index(a, workers),
        Command::Retrieve(a) => retrieve(a),
        Command::Answer(a) => {
            let pipeline = Pipeline::from_config(&a.pipeline.config(a.beta, cli.seed, workers)?)?;
            let answers = pipeline.answer("cli", &a.question)?;
            let line = serde_json::json!({
                "question": a.question,
                "answers": answers.answers.iter().map(|f| serde_json::json!({
                    "text": f.candidate.text,
                    "score": f.fused,
                    "doc_norm": f.doc_norm,
                    "ans_norm": f.ans_norm,
                    "article_id": f.candidate.article_id,
                    "paragraph_index": f.candidate.paragraph_index,
                    "char_start": f.candidate.char_start,
                    "char_end": f.candidate.char_end,
                })).collect::<Vec<_>>(),
            });
            println!("{line}");
            Ok(())
        }
        Command::EvalRetriever(a) => eval_retriever(a),
        Command::EvalReader(a) => {
            let data = load_dataset(&a.dataset, false)?;
            let reader = a
                .reader
                .spec()?
                .build(&AnalyzerConfig::default(), cli.seed, workers)?;
            let (report, preds) = evaluate_reader(&data.examples, reader.as_ref(), workers)?;
            if let Some(p) = &a.predictions {
                write_json(p, &preds)?;
            }
            emit_report(&report, a.report.as_deref())
        }
        Command::EvalOpen(a) => {
            let data = load_dataset(&a.dataset, false)?;
            let pipeline = Pipeline::from_config(&a.pipeline.config(a.beta, cli.seed, workers)?)?;
            let top_n_path = a.predictions_top_n.clone().or_else(|| {
                a.predictions.as_ref().map(|p| {
                    let mut s = p.clone().into_os_string();
                    s.push(".top_n");
                    PathBuf::from(s)
                })
            });
            let out = a.predictions.as_deref().zip(top_n_path.as_deref());
            let report = pipeline.evaluate_open_domain(&data.examples, out)?;
            emit_report(&report, a.report.as_deref())
        }
        Command::TuneBeta(a) => {
            let data = load_dataset(&a.dataset, false)?;
            // β does not influence candidate generation.
            let pipeline = Pipeline::from_config(&a.pipeline.config(0.0, cli.seed, workers)?)?;
            let candidates = pipeline.collect_candidates(&data.examples)?;
            let dev: Vec<DevQuestion> = data
                .examples
                .iter()
                .zip(candidates)
                .map(|(e, candidates)| DevQuestion {
                    candidates,
                    golds: e.gold_texts().map(String::from).collect(),
                })
                .collect();
            let beta = tune_beta(&dev, a.grid_step).map_err(|e| match e {
                crate::fusion::FusionError::BadStep(_) => usage(&e.to_string()),
                other => Failure::Runtime(other.to_string()),
            })?;
            println!("{}", serde_json::json!({ "beta": beta }));
            Ok(())
        }
        Command::Align(a) => {
            if a.max_words == 0 {
                return Err(usage("--max-words must be at least 1"));
            }
            let data = load_dataset(&a.dataset, false)?;
            let (fixed, stats) = align_dataset(&data.file, a.max_words);
            save_dataset(&fixed, &a.out)?;
            match &a.stats {
                Some(p) => write_json(p, &stats)?,
                None => println!(
                    "{}",
                    serde_json::to_string(&stats).expect("stats serialize")
                ),
            }
            Ok(())
        }
    }
}

fn emit_report(report: &impl serde::Serialize, path: Option<&Path>) -> Outcome<()> {
    if let Some(p) = path {
        write_json(p, report)?;
    }
    println!(
        "{}",
        serde_json::to_string(report).expect("report serializes")
    );
    Ok(())
}

fn hash_bins(bits: u32) -> Outcome<u64> {
    if !(crate::tfidf::MIN_HASH_BITS..=crate::tfidf::MAX_HASH_BITS).contains(&bits) {
        return Err(usage(&format!(
            "--hash-bits must be between {} and {}",
            crate::tfidf::MIN_HASH_BITS,
            crate::tfidf::MAX_HASH_BITS
        )));
    }
    Ok(1u64 << bits)
}

fn build_index(a: &BuildIndexArgs, workers: usize) -> Outcome<()> {
    let bins = hash_bins(a.hash_bits)?;
    let corpus = load_corpus(
        &a.corpus,
        CorpusOptions {
            min_paragraph_chars: a.min_paragraph_chars,
        },
    )?;
    let cfg = a.analyzer.config(a.ngrams)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Runtime(e.to_string()))?;
    let index = pool.install(|| {
        IndexBuilder::new(&cfg)
            .hash_bins(bins)
            .unit(a.unit)
            .build(corpus.documents(a.unit))
    })?;
    save_index(&index, &a.out)?;
    log::info!(
        "indexed {} documents ({} non-zeros) into {}",
        index.len(),
        index.nnz(),
        a.out.display()
    );
    Ok(())
}

fn retrieve(a: &RetrieveArgs) -> Outcome<()> {
    if a.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let index = load_index(&a.index)?;
    let corpus = match (&a.corpus, a.mode) {
        (Some(p), _) => Some(load_corpus(p, CorpusOptions::default())?),
        (None, RetrieveMode::Hierarchical) => {
            return Err(usage("hierarchical retrieval needs --corpus"))
        }
        (None, RetrieveMode::Flat) => None,
    };
    let questions: Vec<(String, String)> = match (&a.question, &a.dataset) {
        (Some(q), _) => vec![("cli".to_string(), q.clone())],
        (None, Some(d)) => load_dataset(d, false)?
            .examples
            .into_iter()
            .map(|e| (e.qid, e.question))
            .collect(),
        (None, None) => unreachable!("clap requires one of them"),
    };
    let cfg = HierarchicalConfig {
        stage1_ngrams: index.ngram_range(),
        k1: a.k1.max(a.k),
        stage2_ngrams: a.stage2_ngrams,
        k2: a.k,
    };
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p).map_err(
            |e| Failure::Runtime(format!("cannot create {}: {e}", p.display())),
        )?)),
        None => Box::new(std::io::stdout().lock()),
    };
    for (qid, q) in questions {
        let hits = match (a.mode, &corpus) {
            (RetrieveMode::Hierarchical, Some(c)) => retrieve_hierarchical(&index, c, &q, &cfg)?,
            _ => retrieve_flat(&index, &q, a.k),
        };
        let line = serde_json::json!({ "qid": qid, "hits": hits });
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn eval_retriever(a: &EvalRetrieverArgs) -> Outcome<()> {
    if a.k.is_empty() || a.k.contains(&0) {
        return Err(usage("--k values must be at least 1"));
    }
    let bins = hash_bins(a.hash_bits)?;
    let corpus = load_corpus(&a.corpus, CorpusOptions::default())?;
    let data = load_dataset(&a.dataset, false)?;
    let docs = corpus.documents(a.unit);
    let mut indexes = BTreeMap::new();
    for m in &a.methods {
        let range = match m {
            MethodArg::Unigram => NgramRange::UNIGRAM,
            MethodArg::Bigram | MethodArg::Hierarchical => NgramRange::BIGRAM,
            MethodArg::Embedding => continue,
        };
        if let std::collections::btree_map::Entry::Vacant(slot) = indexes.entry(range.hi) {
            slot.insert(
                IndexBuilder::new(&a.analyzer.config(range)?)
                    .hash_bins(bins)
                    .unit(a.unit)
                    .build(docs.clone())?,
            );
        }
    }
    let embedding = match (a.methods.contains(&MethodArg::Embedding), &a.vectors) {
        (true, Some(v)) => Some(EmbeddingRetriever::build(
            &corpus,
            a.unit,
            Arc::new(WordVectors::load(v)?),
        )),
        (true, None) => return Err(usage("the embedding method needs --vectors")),
        _ => None,
    };
    let methods: Vec<RetrievalMethod> = a
        .methods
        .iter()
        .map(|m| match m {
            MethodArg::Unigram => RetrievalMethod::Flat {
                name: "unigram".into(),
                index: &indexes[&1],
            },
            MethodArg::Bigram => RetrievalMethod::Flat {
                name: "bigram".into(),
                index: &indexes[&2],
            },
            MethodArg::Hierarchical => RetrievalMethod::Hierarchical {
                name: "hierarchical".into(),
                index: &indexes[&2],
                config: HierarchicalConfig {
                    k1: a.k1,
                    ..HierarchicalConfig::default()
                },
            },
            MethodArg::Embedding => RetrievalMethod::Embedding {
                name: "embedding".into(),
                retriever: embedding.as_ref().expect("built above"),
                unit: a.unit,
            },
        })
        .collect();
    let rows = evaluate_retriever(&data.examples, &corpus, &methods, &a.k, a.raw_match)?;
    emit_report(&rows, a.report.as_deref())
}
