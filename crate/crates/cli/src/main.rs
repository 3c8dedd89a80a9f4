mod commands;
mod config;
mod system;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use luxkit::corpus::CorpusFormat;
use luxkit::report::ReportFormat;
use luxkit::{Error, Execution, LanguagePair, MetricId};

#[derive(Debug, Parser)]
#[command(
    name = "luxkit",
    version,
    about = "Parallel-corpus curation and MT evaluation",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    /// TOML configuration file (falls back to $LUXKIT_CONFIG)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Run data-parallel loops on one thread
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Segment, align, filter, dedup and select a benchmark from document pairs
    BuildBenchmark(BuildBenchmarkArgs),
    /// Apply similarity, length and duplicate filters to a corpus
    Filter(FilterArgs),
    /// Build an instruction-tuning mixture from filtered parallel sources
    Mixture(MixtureArgs),
    /// Score one system output with one metric
    Score(ScoreArgs),
    /// Paired bootstrap significance test between two systems
    Compare(CompareArgs),
    /// Correlate the QE metric with every other metric across systems
    Correlate(CorrelateArgs),
    /// Delta table with significance and accuracy estimates
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct BuildBenchmarkArgs {
    /// Source-language documents, JSONL with `id` and `text`
    #[arg(long)]
    source_docs: PathBuf,
    /// Target-language documents, paired with sources by `id`
    #[arg(long)]
    target_docs: PathBuf,
    #[arg(long)]
    lp: LanguagePair,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_words: Option<usize>,
    /// greedy_one_to_one or nearest
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Output format; inferred from the extension when omitted
    #[arg(long)]
    format: Option<CorpusFormat>,
    /// Also write a TSV for manual review
    #[arg(long)]
    review: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    /// Language pair, needed when the input has no manifest
    #[arg(long)]
    lp: Option<LanguagePair>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    dedup: bool,
    #[arg(long)]
    top_k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MixtureArgs {
    /// NAME=PATH or NAME=PATH@THRESHOLD; repeatable
    #[arg(long = "source", required = true, value_name = "NAME=PATH[@THRESHOLD]")]
    sources: Vec<String>,
    /// Target languages to keep, comma separated
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    /// Prompt template with [Target Language] and [source segment] slots
    #[arg(long)]
    template: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Manifest path; defaults to OUT with a .mixture.json suffix
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScorerArgs {
    /// Scorer program speaking the NDJSON protocol, for neural metrics
    /// without input scores
    #[arg(long)]
    scorer: Option<String>,
    /// Argument passed to the scorer program; repeatable
    #[arg(long = "scorer-arg", allow_hyphen_values = true)]
    scorer_args: Vec<String>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// System output, JSONL with id, hyp and optional src, ref, scores
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    metric: MetricId,
    #[arg(long)]
    lp: LanguagePair,
    /// System name; defaults to the file stem
    #[arg(long)]
    name: Option<String>,
    /// Write per-segment scores as TSV
    #[arg(long)]
    segments: Option<PathBuf>,
    /// TSV of segment_id and score for a neural metric
    #[arg(long, conflicts_with = "scorer")]
    precomputed: Option<PathBuf>,
    #[command(flatten)]
    scorer: ScorerArgs,
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    confidence: Option<f64>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    baseline: PathBuf,
    #[arg(long)]
    candidate: PathBuf,
    #[arg(long)]
    metric: MetricId,
    #[arg(long)]
    lp: LanguagePair,
    /// text or json
    #[arg(long, default_value = "text")]
    format: String,
    #[command(flatten)]
    bootstrap: BootstrapArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// Score table TSV (system, lp, metric, value); defaults to the built-in table
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Restrict to one language pair
    #[arg(long)]
    lp: Option<LanguagePair>,
    /// markdown, csv or json
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// LP=BASELINE,CANDIDATE system outputs; repeatable
    #[arg(long = "pair", required = true, value_name = "LP=BASELINE,CANDIDATE")]
    pairs: Vec<String>,
    /// Metrics to report, comma separated; defaults to bleu,chrf2,ter
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<MetricId>,
    #[arg(long)]
    baseline_name: Option<String>,
    #[arg(long)]
    candidate_name: Option<String>,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    bootstrap: BootstrapArgs,
    #[command(flatten)]
    scorer: ScorerArgs,
}

impl Command {
    fn stage(&self) -> &'static str {
        match self {
            Command::BuildBenchmark(_) => "build-benchmark",
            Command::Filter(_) => "filter",
            Command::Mixture(_) => "mixture",
            Command::Score(_) => "score",
            Command::Compare(_) => "compare",
            Command::Correlate(_) => "correlate",
            Command::Report(_) => "report",
        }
    }
}

fn run(cli: Cli) -> luxkit::Result<()> {
    let cfg = config::Config::load(cli.config.as_deref()).map_err(|e| e.in_stage("config"))?;
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let stage = cli.command.stage();
    let result = match cli.command {
        Command::BuildBenchmark(a) => commands::build_benchmark(&cfg, a),
        Command::Filter(a) => commands::filter(&cfg, a),
        Command::Mixture(a) => commands::mixture(&cfg, a),
        Command::Score(a) => commands::score(&cfg, exec, a),
        Command::Compare(a) => commands::compare(&cfg, exec, a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Report(a) => commands::report(&cfg, exec, a),
    };
    result.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => other.in_stage(stage),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
