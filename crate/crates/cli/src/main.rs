//! Command-line front end tying the pipeline together.
//!
//! Exit codes: 0 on success, 1 on domain errors (one-line `error: ...` on
//! stderr), 2 on usage errors (clap prints usage).

mod cmds;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use iotwatch_core::corpus::Variant;

#[derive(Parser)]
#[command(
    name = "iotwatch",
    version,
    about = "CVE-trained IoT vulnerability classification and stream monitoring"
)]
struct Cli {
    /// JSON config file; every key is overridable by the same-named flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    #[value(name = "cve_tagged", alias = "cve-tagged")]
    CveTagged,
    #[value(name = "no_cve_tag", alias = "no-cve-tag")]
    NoCveTag,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::CveTagged => Variant::CveTagged,
            VariantArg::NoCveTag => Variant::NoCveTag,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse NVD feed files into a labeled JSONL corpus.
    Ingest(IngestArgs),
    /// Draw balanced, seeded train/validation splits from a labeled corpus.
    Split(SplitArgs),
    /// Train a classifier; writes the model and vocabulary files.
    Train(TrainArgs),
    /// Grid search with k-fold cross-validation; writes a CSV table.
    Tune(TuneArgs),
    /// Score a model (or stored predictions) against a labeled corpus.
    Evaluate(EvaluateArgs),
    /// Classify a keyword-filtered event stream and emit alerts.
    Monitor(MonitorArgs),
    /// Split, train and evaluate all six classifiers in both text variants.
    ReproduceTable2(ReproduceArgs),
}

#[derive(clap::Args)]
struct IngestArgs {
    /// Feed files or directories of *.json / *.json.gz feeds.
    #[arg(long, value_name = "PATH", num_args = 1..)]
    feeds: Vec<PathBuf>,
    /// Output corpus JSONL path.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Optional JSONL report of skipped feed items.
    #[arg(long, value_name = "FILE")]
    skipped_report: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SplitArgs {
    /// Labeled corpus JSONL.
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Output directory for train.jsonl and validation.jsonl.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    train_size: Option<usize>,
    #[arg(long, value_name = "N")]
    val_size: Option<usize>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Labeled training corpus JSONL.
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Classifier kind (logreg, multinomial_nb, dtree, knn, svm, rforest).
    #[arg(long, value_name = "KIND")]
    kind: Option<String>,
    /// Full spec as inline JSON, e.g. '{"kind":"rforest","trees":100}'.
    #[arg(long, value_name = "JSON")]
    spec_json: Option<String>,
    /// Output model file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Output vocabulary file (default: model path with .vocab.json).
    #[arg(long, value_name = "FILE")]
    vocab_out: Option<PathBuf>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Alternative stopword list, one word per line.
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Vectorize with raw term counts instead of TF-IDF.
    #[arg(long)]
    raw_counts: bool,
    /// Also write the training report JSON here.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

#[derive(clap::Args)]
struct TuneArgs {
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Grid file: JSON kind -> parameter -> list of values. Defaults to the
    /// built-in grid.
    #[arg(long, value_name = "FILE")]
    grid: Option<PathBuf>,
    #[arg(long, value_name = "K")]
    folds: Option<usize>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Results CSV path.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    raw_counts: bool,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// Trained model file.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Vocabulary file the model was trained with.
    #[arg(long, value_name = "FILE")]
    vocab: Option<PathBuf>,
    /// Labeled corpus to score against.
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Stored predictions JSONL (doc_id + label); skips the model path.
    #[arg(long, value_name = "FILE")]
    predictions: Option<PathBuf>,
    /// Ground-truth labeled JSONL for --predictions.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
    /// Also write the metrics report JSON here.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    raw_counts: bool,
}

#[derive(clap::Args)]
struct MonitorArgs {
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    vocab: Option<PathBuf>,
    /// Replay a captured JSONL event stream.
    #[arg(long, value_name = "FILE")]
    replay: Option<PathBuf>,
    /// Connect to the live filtered-stream endpoint instead of a replay.
    #[arg(long)]
    live: bool,
    /// Alert JSONL output (default: standard output).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Final MonitorStats JSON output.
    #[arg(long, value_name = "FILE")]
    stats_out: Option<PathBuf>,
    /// Keyword list file, one per line (default: the built-in 11 keywords).
    #[arg(long, value_name = "FILE")]
    keywords_file: Option<PathBuf>,
    /// Stop after this many collected events.
    #[arg(long, value_name = "N")]
    limit: Option<u64>,
    /// Stop after this many seconds.
    #[arg(long, value_name = "SECS")]
    duration_secs: Option<u64>,
    /// Environment variable holding the live bearer token.
    #[arg(long, value_name = "NAME")]
    token_env: Option<String>,
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    raw_counts: bool,
}

#[derive(clap::Args)]
struct ReproduceArgs {
    /// Labeled CVE corpus JSONL (ingest output).
    #[arg(long, value_name = "FILE")]
    cve_corpus: Option<PathBuf>,
    /// Labeled tweet corpus JSONL to evaluate on.
    #[arg(long, value_name = "FILE")]
    tweets: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    train_size: Option<usize>,
    #[arg(long, value_name = "N")]
    val_size: Option<usize>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Report JSON output path.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    stopwords: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = config::Config::load(cli.config.as_deref()).and_then(|config| match cli.command {
        Command::Ingest(args) => cmds::ingest(args, &config),
        Command::Split(args) => cmds::split(args, &config),
        Command::Train(args) => cmds::train(args, &config),
        Command::Tune(args) => cmds::tune(args, &config),
        Command::Evaluate(args) => cmds::evaluate(args, &config),
        Command::Monitor(args) => cmds::monitor(args, &config),
        Command::ReproduceTable2(args) => cmds::reproduce_table2(args, &config),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
