//! `tesa`: build an index, query relatedness, inspect the tree, evaluate.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal error.

mod config;

use std::fs;
use std::io::{self, Write};
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use tesa_core::arborification::{random_walk_cycle_census, CycleCensus, WeightedDigraph};
use tesa_core::corpus::{load_eval_corpus, FilterThresholds};
use tesa_core::evaluation::{
    cross_validate, degree_distribution, export_sparse_features, DegreeDistribution, EvalStats,
};
use tesa_core::textproc::{load_lexicon, load_stopwords, load_suffix_rules, normalize_text, PipelineConfig};
use tesa_core::{build_index, load_index, BuildOptions, EsaModel, LambdaSchedule, SupportMode, TesaError};

use config::{pick, FileConfig};

#[derive(Parser, Debug)]
#[command(
    name = "tesa",
    version,
    about = "Explicit Semantic Analysis with thematic reinforcement"
)]
struct Cli {
    /// JSON file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load, filter and index a corpus.
    Build(BuildArgs),
    /// Relatedness of two words.
    Sim(SimArgs),
    /// Ancestor path of a node, or the whole spanning tree.
    Tree(TreeArgs),
    /// Cross-validated classification for one or more λ schedules.
    Eval(EvalArgs),
    /// Degree distribution, power-law fit and random-walk cycle census.
    Stats(StatsArgs),
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long)]
    pages: Option<PathBuf>,
    #[arg(long)]
    categories: Option<PathBuf>,
    /// Root category id.
    #[arg(long)]
    root: Option<String>,
    /// Output index directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    min_links_in: Option<usize>,
    #[arg(long)]
    min_links_out: Option<usize>,
    #[arg(long)]
    min_token_len: Option<usize>,
    /// One stopword per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// One `-suffix → replacement` rule per line.
    #[arg(long)]
    suffix_rules: Option<PathBuf>,
    /// Tab-separated `form lemma` lines.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Inclusive,
    Exclusive,
}

impl From<ModeArg> for SupportMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Inclusive => SupportMode::Inclusive,
            ModeArg::Exclusive => SupportMode::Exclusive,
        }
    }
}

#[derive(Args, Debug)]
struct SimArgs {
    index: PathBuf,
    word: String,
    other: String,
    /// Comma-separated λ₁,λ₂,…; empty for standard ESA.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

#[derive(Args, Debug)]
struct TreeArgs {
    index: PathBuf,
    /// Print the ancestors of this node, parent first.
    #[arg(long)]
    page: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    index: PathBuf,
    /// Labeled documents (JSONL with doc_id, label, text).
    #[arg(long)]
    docs: PathBuf,
    /// λ schedule; repeatable.
    #[arg(long)]
    lambda: Vec<String>,
    /// File with one λ schedule per line (`0` for standard ESA).
    #[arg(long)]
    sweep: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Write sparse features instead of evaluating; with several schedules
    /// the k-th goes to `<path>.<k>`.
    #[arg(long)]
    export: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// Index directory; omit when using --edges.
    index: Option<PathBuf>,
    /// Standalone `source target weight` edge list.
    #[arg(long, requires = "sink", conflicts_with = "index")]
    edges: Option<PathBuf>,
    #[arg(long)]
    sink: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of random walks.
    #[arg(long)]
    walks: Option<usize>,
}

const DEFAULT_FOLDS: usize = 10;
const DEFAULT_SEED: u64 = 42;
const DEFAULT_WALKS: usize = 1000;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(TesaError),
}

impl From<TesaError> for CliError {
    fn from(e: TesaError) -> Self {
        match e {
            TesaError::Config(message) => CliError::Usage(message),
            other => CliError::Data(other),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn write_stdout(text: &str) -> CliResult<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| {
        CliError::Data(TesaError::Io {
            context: "writing standard output".into(),
            source: e,
        })
    })
}

fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn parse_mode(flag: Option<ModeArg>, file: &Option<String>) -> CliResult<SupportMode> {
    if let Some(m) = flag {
        return Ok(m.into());
    }
    match file.as_deref() {
        None | Some("inclusive") => Ok(SupportMode::Inclusive),
        Some("exclusive") => Ok(SupportMode::Exclusive),
        Some(other) => Err(usage(format!("unknown mode {other:?} in config"))),
    }
}

fn cmd_build(args: BuildArgs, cfg: &FileConfig) -> CliResult<()> {
    let pages = pick(args.pages, &cfg.pages).ok_or_else(|| usage("--pages is required"))?;
    let categories = pick(args.categories, &cfg.categories).ok_or_else(|| usage("--categories is required"))?;
    let root = pick(args.root, &cfg.root).ok_or_else(|| usage("--root is required"))?;
    let out = pick(args.out, &cfg.out).ok_or_else(|| usage("--out is required"))?;
    let defaults = FilterThresholds::default();
    let thresholds = FilterThresholds {
        min_words: pick(args.min_words, &cfg.min_words).unwrap_or(defaults.min_words),
        min_links_in: pick(args.min_links_in, &cfg.min_links_in).unwrap_or(defaults.min_links_in),
        min_links_out: pick(args.min_links_out, &cfg.min_links_out).unwrap_or(defaults.min_links_out),
    };
    let mut pipeline = PipelineConfig::default();
    if let Some(n) = pick(args.min_token_len, &cfg.min_token_len) {
        pipeline.min_token_len = n;
    }
    if let Some(path) = pick(args.stopwords, &cfg.stopwords) {
        pipeline = pipeline.with_stopwords(load_stopwords(&path)?);
    }
    if let Some(path) = pick(args.suffix_rules, &cfg.suffix_rules) {
        pipeline = pipeline.with_suffix_rules(load_suffix_rules(&path)?);
    }
    if let Some(path) = pick(args.lexicon, &cfg.lexicon) {
        pipeline.lemmatizer = Some(load_lexicon(&path)?);
    }
    let options = BuildOptions { thresholds, pipeline };
    let (_, summary) = build_index(&pages, &categories, &root, &options, &out)?;
    write_stdout(&format!(
        "pages: {}\ncategories: {}\nterms: {}\nmembership edges: {}\nsubcategory edges: {}\nremoved edges: {}\ntree weight: {:.6}\n",
        summary.pages,
        summary.categories,
        summary.terms,
        summary.membership_edges,
        summary.subcategory_edges,
        summary.removed_edges,
        summary.tree_weight
    ))
}

fn load(index: &Path) -> CliResult<EsaModel> {
    Ok(load_index(index)?.0)
}

/// Map a query word through the index's normalization.
fn query_word(model: &EsaModel, word: &str) -> CliResult<String> {
    let mut tokens = normalize_text(word, &model.pipeline);
    match tokens.len() {
        1 => Ok(tokens.remove(0)),
        0 => Err(CliError::Data(TesaError::Unknown {
            kind: "word",
            id: word.to_string(),
        })),
        n => Err(usage(format!("{word:?} normalizes to {n} tokens; give a single word"))),
    }
}

fn cmd_sim(args: SimArgs, cfg: &FileConfig) -> CliResult<()> {
    let lambda = LambdaSchedule::parse(&pick(args.lambda, &cfg.lambda).unwrap_or_default())?;
    let mode = parse_mode(args.mode, &cfg.mode)?;
    let model = load(&args.index)?;
    let (w, v) = (query_word(&model, &args.word)?, query_word(&model, &args.other)?);
    let rs = model.reinforced()?.with_mode(mode);
    let mu = rs.relatedness(&w, &v, &lambda)?;
    write_stdout(&format!("{mu:.6}\n"))
}

fn cmd_tree(args: TreeArgs) -> CliResult<()> {
    let model = load(&args.index)?;
    let text = match args.page {
        Some(page) => {
            let mut lines = model.tree.ancestor_path(&page)?.join("\n");
            if !lines.is_empty() {
                lines.push('\n');
            }
            lines
        }
        None => model
            .tree
            .parent_lines()
            .into_iter()
            .map(|(v, p, w)| format!("{v}\t{p}\t{w}\n"))
            .collect(),
    };
    write_stdout(&text)
}

fn read_sweep(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Data(TesaError::Io {
            context: format!("reading {}", path.display()),
            source: e,
        })
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn cmd_eval(args: EvalArgs, cfg: &FileConfig) -> CliResult<()> {
    let mut texts = args.lambda;
    if let Some(sweep) = &args.sweep {
        texts.extend(read_sweep(sweep)?);
    }
    if texts.is_empty() {
        texts.push(cfg.lambda.clone().unwrap_or_default());
    }
    let schedules = texts
        .iter()
        .map(|t| LambdaSchedule::parse(t))
        .collect::<Result<Vec<_>, _>>()?;
    let folds = pick(args.folds, &cfg.folds).unwrap_or(DEFAULT_FOLDS);
    let seed = pick(args.seed, &cfg.seed).unwrap_or(DEFAULT_SEED);
    let mode = parse_mode(args.mode, &cfg.mode)?;

    let model = load(&args.index)?;
    let eval = load_eval_corpus(&args.docs)?;
    let rs = model.reinforced()?.with_mode(mode);
    let stats = EvalStats::build(&eval, &model.pipeline);

    if let Some(path) = args.export {
        for (k, lambda) in schedules.iter().enumerate() {
            let target = if schedules.len() == 1 {
                path.clone()
            } else {
                PathBuf::from(format!("{}.{}", path.display(), k + 1))
            };
            export_sparse_features(&rs, &eval, &stats, lambda, &target)?;
        }
        return Ok(());
    }
    let reports = schedules
        .iter()
        .map(|lambda| cross_validate(&rs, &eval, &stats, lambda, folds, seed))
        .collect::<Result<Vec<_>, _>>()?;
    write_stdout(&json(&reports))
}

#[derive(Serialize)]
struct StatsReport {
    nodes: usize,
    edges: usize,
    removed_edges: Option<usize>,
    degree: DegreeDistribution,
    census: CycleCensus,
}

fn cmd_stats(args: StatsArgs, cfg: &FileConfig) -> CliResult<()> {
    let seed = pick(args.seed, &cfg.seed).unwrap_or(DEFAULT_SEED);
    let walks = pick(args.walks, &cfg.walks).unwrap_or(DEFAULT_WALKS);
    let (graph, removed): (WeightedDigraph, Option<usize>) = match (args.index, args.edges) {
        (Some(index), None) => {
            let model = load(&index)?;
            let removed = model.removed.len();
            (model.graph, Some(removed))
        }
        (None, Some(edges)) => {
            let sink = args.sink.ok_or_else(|| usage("--sink is required with --edges"))?;
            (WeightedDigraph::read_edges(&edges, &sink)?, None)
        }
        _ => return Err(usage("give an index directory or --edges FILE --sink ID")),
    };
    let report = StatsReport {
        nodes: graph.n_nodes(),
        edges: graph.edges().len(),
        removed_edges: removed,
        degree: degree_distribution(&graph),
        census: random_walk_cycle_census(&graph, seed, walks),
    };
    write_stdout(&json(&report))
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Build(args) => cmd_build(args, &cfg),
        Command::Sim(args) => cmd_sim(args, &cfg),
        Command::Tree(args) => cmd_tree(args),
        Command::Eval(args) => cmd_eval(args, &cfg),
        Command::Stats(args) => cmd_stats(args, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(CliError::Usage(message))) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Ok(Err(CliError::Data(e))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(3)
        }
    }
}
