mod commands;
mod config;
mod io;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use stancekit::eval::BaselineDistribution;
use stancekit::features::InputMode;
use stancekit::preprocess::EmojiMode;
use stancekit::Task;

/// Stance and premise detection pipeline for health-mandate tweets.
#[derive(Parser, Debug)]
#[command(name = "stancekit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clean tweets and drop duplicates and short posts.
    Preprocess(PreprocessArgs),
    /// Pre-label tweets from stance hashtags.
    Weaklabel(WeaklabelArgs),
    /// Draw an equal number of tweets from each pre-label stratum.
    Sample(SampleArgs),
    /// Turn five-annotator ballots into gold labels.
    Aggregate(AggregateArgs),
    /// Print per-claim label counts, optionally checking them against expected counts.
    Stats(StatsArgs),
    /// Train a fusion classifier (or a k-fold ensemble).
    Train(TrainArgs),
    /// Label a corpus with one or more trained checkpoints.
    Predict(PredictArgs),
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
    /// Score a uniform random predictor on a split's label counts.
    Baseline(BaselineArgs),
    /// Merge evaluation results into tables and charts.
    Report(ReportArgs),
    /// Tabulate externally assigned emotion labels per stance.
    Emotions(EmotionsArgs),
    /// Write synthetic corpora.
    Fixture(FixtureArgs),
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Cleaned corpus; relative paths land under --out-dir when it is given.
    #[arg(long, default_value = "clean.jsonl")]
    out: PathBuf,
    /// Drop log, one {id, reason} per line.
    #[arg(long, default_value = "dropped.jsonl")]
    dropped: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Minimum cleaned length in characters.
    #[arg(long = "min-len", default_value_t = 150)]
    min_len: usize,
    #[arg(long, default_value = "to_text")]
    emoji: EmojiMode,
    #[arg(long)]
    keep_urls: bool,
    #[arg(long)]
    keep_mentions: bool,
    #[arg(long)]
    keep_hashtags: bool,
    #[arg(long)]
    no_dedup: bool,
}

#[derive(Args, Debug)]
struct WeaklabelArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// JSON object mapping hashtags to favor/against; defaults to the bundled lexicon.
    #[arg(long)]
    lexicon: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Total sample size; must be divisible by 3.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    ballots: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 4)]
    quorum: usize,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Expected counts file to validate against.
    #[arg(long, conflicts_with = "expect_split")]
    expect: Option<PathBuf>,
    /// Validate against the bundled counts of a named split (train, validation, test, vaccines).
    #[arg(long)]
    expect_split: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Treat premise on a neither-stance record as an error.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Desk,
    Paper,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Experiment configuration JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    validation: Option<PathBuf>,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    mode: Option<InputMode>,
    /// Append dependency-rank features.
    #[arg(long)]
    syntax: bool,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Checkpoint; repeat to ensemble, and mix tasks to predict both.
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Row label in reports.
    #[arg(long, default_value = "model")]
    model_name: String,
    #[arg(long, default_value = "tweet_only")]
    mode: InputMode,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    /// Split counts file.
    #[arg(long, conflicts_with = "split")]
    stats: Option<PathBuf>,
    /// Bundled counts of a named split.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    task: Task,
    #[arg(long, default_value = "uniform3")]
    distribution: BaselineDistribution,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Evaluation result files to merge, in row order.
    #[arg(long = "results", required = true)]
    results: Vec<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct EmotionsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    emotions: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FixtureKind {
    /// Labeled placeholder splits matching the published counts.
    Splits,
    /// Raw tweets, ballots, test set and emotion labels for an end-to-end run.
    Pipeline,
    /// Identical texts whose labels depend on the claim.
    ClaimDependent,
}

#[derive(Args, Debug)]
struct FixtureArgs {
    #[arg(long, value_enum)]
    kind: FixtureKind,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 600)]
    n_raw: usize,
    #[arg(long, default_value_t = 150)]
    n_test: usize,
}

/// A check that ran and failed, as opposed to an error that stopped the run.
#[derive(Debug)]
pub struct ValidationFailed(pub String);

impl std::fmt::Display for ValidationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationFailed {}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Preprocess(a) => commands::data::preprocess(a),
        Command::Weaklabel(a) => commands::data::weaklabel(a),
        Command::Sample(a) => commands::data::sample(a),
        Command::Aggregate(a) => commands::data::aggregate(a),
        Command::Stats(a) => commands::data::stats(a),
        Command::Train(a) => commands::model::train(a),
        Command::Predict(a) => commands::model::predict(a),
        Command::Evaluate(a) => commands::scoring::evaluate(a),
        Command::Baseline(a) => commands::scoring::baseline(a),
        Command::Report(a) => commands::scoring::report(a),
        Command::Emotions(a) => commands::scoring::emotions(a),
        Command::Fixture(a) => commands::data::fixture(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
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
            if let Some(v) = e.downcast_ref::<ValidationFailed>() {
                eprintln!("validation failed: {v}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}
