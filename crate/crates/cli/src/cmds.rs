//! Subcommand implementations.
//!
//! Primary outputs (corpora, splits, models, reports, alerts, stats) are
//! byte-deterministic for fixed inputs and seeds; anything wall-clock-ish
//! goes to stderr.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::json;

use iotwatch_core::corpus::{
    self, build_balanced_splits, read_corpus_file, write_corpus_file, LabeledDoc, Variant,
};
use iotwatch_core::features::{FeatureMatrix, Vocabulary, Weighting};
use iotwatch_core::metrics::{macro_metrics, trunc4, ConfusionMatrix, MetricsReport};
use iotwatch_core::model::{train_model, ModelSpec, TrainedModel};
use iotwatch_core::monitor::{
    self, run_monitor, EventSource, JsonlSink, KeywordSet, ReplaySource, StopBound,
};
use iotwatch_core::text::{preprocess, Stopwords, TokenSequence};
use iotwatch_core::tuning::{default_grid, expand_grid_file, grid_search, FoldPlan};
use iotwatch_core::{Label, Pipeline};

use crate::config::{Config, DEFAULT_SEED, DEFAULT_TRAIN_SIZE, DEFAULT_VAL_SIZE};
use crate::{
    EvaluateArgs, IngestArgs, MonitorArgs, ReproduceArgs, SplitArgs, TrainArgs, TuneArgs,
};

fn load_stopwords(config: &Config, flag: Option<PathBuf>) -> Result<Stopwords> {
    match config.path("stopwords", flag) {
        Some(path) => {
            config.check_input(&path)?;
            Ok(Stopwords::from_file(&path)?)
        }
        None => Ok(Stopwords::bundled().clone()),
    }
}

fn weighting_of(config: &Config, raw_counts: bool) -> Weighting {
    if config.flag("raw_counts", raw_counts) {
        Weighting::RawCount
    } else {
        Weighting::TfIdf
    }
}

fn tokenize_corpus(docs: &[LabeledDoc], stopwords: &Stopwords) -> Vec<TokenSequence> {
    docs.iter().map(|d| preprocess(&d.text, stopwords)).collect()
}

fn labels_of(docs: &[LabeledDoc]) -> Vec<Label> {
    docs.iter().map(|d| d.label).collect()
}

fn write_or_stdout(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{content}"),
    }
    Ok(())
}

// ------------------------------------------------------------------ ingest

pub fn ingest(args: IngestArgs, config: &Config) -> Result<()> {
    let mut feed_args = args.feeds;
    if feed_args.is_empty() {
        if let Some(path) = config.path("feeds", None) {
            feed_args.push(path);
        }
    }
    if feed_args.is_empty() {
        bail!("missing required input: --feeds");
    }
    let mut files = Vec::new();
    for path in &feed_args {
        config.check_input(path)?;
        if path.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    let name = p.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default();
                    name.ends_with(".json") || name.ends_with(".json.gz")
                })
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        bail!("no feed files found under the given paths");
    }
    let out = config.required_path("out", args.out)?;
    let (docs, stats) = corpus::ingest_feeds(&files)?;
    write_corpus_file(&out, &docs)?;
    if let Some(report_path) = config.path("skipped_report", args.skipped_report) {
        let mut buf = String::new();
        for item in &stats.skipped {
            buf.push_str(&serde_json::to_string(item)?);
            buf.push('\n');
        }
        std::fs::write(&report_path, buf)?;
    }
    let summary = json!({
        "files": stats.files,
        "items": stats.items,
        "records": stats.records,
        "duplicates_removed": stats.duplicates_removed,
        "rejected_removed": stats.rejected_removed,
        "related": stats.related,
        "unrelated": stats.unrelated,
        "cpe_warnings": stats.cpe_warnings,
        "skipped_items": stats.skipped.len(),
        "out": out.display().to_string(),
    });
    println!("{summary}");
    Ok(())
}

// ------------------------------------------------------------------ split

pub fn split(args: SplitArgs, config: &Config) -> Result<()> {
    let corpus_path = config.required_path("corpus", args.corpus)?;
    config.check_input(&corpus_path)?;
    let out_dir = config.required_path("out", args.out)?;
    let train_size = config.usize("train_size", args.train_size, DEFAULT_TRAIN_SIZE);
    let val_size = config.usize("val_size", args.val_size, DEFAULT_VAL_SIZE);
    let seed = config.u64("seed", args.seed, DEFAULT_SEED);
    let variant = resolve_variant(config, args.variant)?;

    let pool = read_corpus_file(&corpus_path)?;
    let split = build_balanced_splits(&pool, train_size, val_size, seed, variant)?;
    std::fs::create_dir_all(&out_dir)?;
    let train_path = out_dir.join("train.jsonl");
    let val_path = out_dir.join("validation.jsonl");
    write_corpus_file(&train_path, &split.train)?;
    write_corpus_file(&val_path, &split.validation)?;
    let summary = json!({
        "train": train_path.display().to_string(),
        "validation": val_path.display().to_string(),
        "train_size": split.train.len(),
        "val_size": split.validation.len(),
        "seed": seed,
        "variant": variant.to_string(),
    });
    println!("{summary}");
    Ok(())
}

fn resolve_variant(config: &Config, flag: Option<crate::VariantArg>) -> Result<Variant> {
    if let Some(v) = flag {
        return Ok(v.into());
    }
    match config.string("variant", None).as_deref() {
        None => Ok(Variant::CveTagged),
        Some("cve_tagged") => Ok(Variant::CveTagged),
        Some("no_cve_tag") => Ok(Variant::NoCveTag),
        Some(other) => bail!("unknown variant {other:?} (use cve_tagged or no_cve_tag)"),
    }
}

// ------------------------------------------------------------------ train

fn resolve_spec(config: &Config, kind: Option<String>, spec_json: Option<String>) -> Result<ModelSpec> {
    let spec = if let Some(json) = spec_json {
        serde_json::from_str(&json).context("parsing --spec-json")?
    } else if let Some(value) = config
        .string("spec_json", None)
        .map(|s| serde_json::from_str::<ModelSpec>(&s))
    {
        value.context("parsing config spec_json")?
    } else {
        let kind = config
            .string("kind", kind)
            .context("missing required input: --kind or --spec-json")?;
        ModelSpec::default_for_kind(&kind)
            .with_context(|| format!("unknown classifier kind {kind:?}"))?
    };
    spec.validate()?;
    Ok(spec)
}

pub fn train(args: TrainArgs, config: &Config) -> Result<()> {
    let corpus_path = config.required_path("corpus", args.corpus)?;
    config.check_input(&corpus_path)?;
    let out = config.required_path("out", args.out)?;
    let vocab_out = config
        .path("vocab_out", args.vocab_out)
        .unwrap_or_else(|| out.with_extension("vocab.json"));
    let seed = config.u64("seed", args.seed, DEFAULT_SEED);
    let spec = resolve_spec(config, args.kind, args.spec_json)?;
    let stopwords = load_stopwords(config, args.stopwords)?;
    let weighting = weighting_of(config, args.raw_counts);

    let docs = read_corpus_file(&corpus_path)?;
    let tokens = tokenize_corpus(&docs, &stopwords);
    let vocab = Vocabulary::fit(&tokens)?;
    let x = FeatureMatrix::from_corpus(&tokens, &vocab, weighting);
    let y = labels_of(&docs);
    let started = std::time::Instant::now();
    let model = train_model(&spec, &x, &y, seed)?;
    eprintln!(
        "trained {} on {} docs ({} terms) in {:.2}s",
        spec.kind(),
        docs.len(),
        vocab.len(),
        started.elapsed().as_secs_f64()
    );
    model.save(&out)?;
    vocab.save(&vocab_out)?;

    let preds = model.predict_matrix(&x)?;
    let train_acc = preds.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64;
    let report = json!({
        "kind": spec.kind(),
        "spec": spec,
        "n_train": docs.len(),
        "vocab_size": vocab.len(),
        "weighting": if weighting == Weighting::TfIdf { "tfidf" } else { "raw_count" },
        "seed": seed,
        "train_accuracy": train_acc,
        "model": out.display().to_string(),
        "vocab": vocab_out.display().to_string(),
    });
    println!("{report}");
    if let Some(report_path) = config.path("report", args.report) {
        std::fs::write(&report_path, report.to_string())?;
    }
    Ok(())
}

// ------------------------------------------------------------------ tune

fn spec_param_string(spec: &ModelSpec) -> String {
    let value = serde_json::to_value(spec).expect("spec serializes");
    let obj = value.as_object().expect("spec is an object");
    obj.iter()
        .filter(|(k, _)| k.as_str() != "kind")
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn tune(args: TuneArgs, config: &Config) -> Result<()> {
    let corpus_path = config.required_path("corpus", args.corpus)?;
    config.check_input(&corpus_path)?;
    let out = config.required_path("out", args.out)?;
    let folds = config.usize("folds", args.folds, 10);
    let seed = config.u64("seed", args.seed, DEFAULT_SEED);
    let stopwords = load_stopwords(config, args.stopwords)?;
    let weighting = weighting_of(config, args.raw_counts);

    let grid = match config.path("grid", args.grid) {
        Some(path) => {
            config.check_input(&path)?;
            expand_grid_file(&std::fs::read_to_string(&path)?)?
        }
        None => default_grid(),
    };

    let docs = read_corpus_file(&corpus_path)?;
    let tokens = tokenize_corpus(&docs, &stopwords);
    let vocab = Vocabulary::fit(&tokens)?;
    let x = FeatureMatrix::from_corpus(&tokens, &vocab, weighting);
    let y = labels_of(&docs);
    let plan = FoldPlan::new(y.len(), folds, seed)?;
    let started = std::time::Instant::now();
    let result = grid_search(&grid, &x, &y, &plan)?;
    eprintln!(
        "searched {} cells x {} folds in {:.2}s",
        grid.len(),
        folds,
        started.elapsed().as_secs_f64()
    );

    let mut writer = csv::Writer::from_path(&out)?;
    writer.write_record(["kind", "params", "f1", "precision", "recall", "accuracy"])?;
    for (spec, report) in &result.table {
        writer.write_record([
            spec.kind().to_string(),
            spec_param_string(spec),
            format!("{:.6}", report.f1),
            format!("{:.6}", report.precision),
            format!("{:.6}", report.recall),
            format!("{:.6}", report.accuracy),
        ])?;
    }
    writer.flush()?;
    println!("{}", json!({ "best": result.best, "table": out.display().to_string() }));
    Ok(())
}

// ------------------------------------------------------------------ evaluate

fn read_predictions(path: &Path) -> Result<BTreeMap<String, Label>> {
    #[derive(serde::Deserialize)]
    struct Pred {
        doc_id: String,
        label: Label,
    }
    let text = std::fs::read_to_string(path)?;
    let mut preds = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pred: Pred = serde_json::from_str(line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        if preds.insert(pred.doc_id.clone(), pred.label).is_some() {
            bail!("duplicate prediction for doc_id {}", pred.doc_id);
        }
    }
    Ok(preds)
}

fn report_json(report: &MetricsReport, cm: &ConfusionMatrix) -> serde_json::Value {
    json!({ "confusion": cm, "metrics": report })
}

pub fn evaluate(args: EvaluateArgs, config: &Config) -> Result<()> {
    let (cm, n) = if let Some(pred_path) = config.path("predictions", args.predictions) {
        config.check_input(&pred_path)?;
        let truth_path = config.required_path("truth", args.truth)?;
        config.check_input(&truth_path)?;
        let truth_docs = read_corpus_file(&truth_path)?;
        let pred_map = read_predictions(&pred_path)?;
        let mut preds = Vec::with_capacity(truth_docs.len());
        let mut truth = Vec::with_capacity(truth_docs.len());
        for doc in &truth_docs {
            let pred = pred_map
                .get(&doc.doc_id)
                .with_context(|| format!("no prediction for doc_id {}", doc.doc_id))?;
            preds.push(*pred);
            truth.push(doc.label);
        }
        (ConfusionMatrix::from_predictions(&preds, &truth)?, truth.len())
    } else {
        let model_path = config.required_path("model", args.model)?;
        config.check_input(&model_path)?;
        let vocab_path = config
            .path("vocab", args.vocab)
            .unwrap_or_else(|| model_path.with_extension("vocab.json"));
        config.check_input(&vocab_path)?;
        let corpus_path = config.required_path("corpus", args.corpus)?;
        config.check_input(&corpus_path)?;
        let stopwords = load_stopwords(config, args.stopwords)?;
        let weighting = weighting_of(config, args.raw_counts);

        let model = TrainedModel::load(&model_path)?;
        let vocab = Vocabulary::load(&vocab_path)?;
        let docs = read_corpus_file(&corpus_path)?;
        let tokens = tokenize_corpus(&docs, &stopwords);
        let x = FeatureMatrix::from_corpus(&tokens, &vocab, weighting);
        if model.vocab_fingerprint() != x.fingerprint() {
            bail!(
                "model is bound to vocabulary {}, but {} has fingerprint {}",
                model.vocab_fingerprint(),
                vocab_path.display(),
                x.fingerprint()
            );
        }
        let preds = model.predict_matrix(&x)?;
        let truth = labels_of(&docs);
        (ConfusionMatrix::from_predictions(&preds, &truth)?, truth.len())
    };

    let report = macro_metrics(&cm)?;
    print!("{}", report.render_table());
    println!(
        "confusion: tp={} fp={} fn={} tn={} (n={})",
        cm.true_pos, cm.false_pos, cm.false_neg, cm.true_neg, n
    );
    if report.degenerate {
        eprintln!("note: a degenerate class ratio (0/0) was reported as 0");
    }
    if let Some(json_path) = config.path("json", args.json) {
        std::fs::write(&json_path, report_json(&report, &cm).to_string())?;
    }
    Ok(())
}

// ------------------------------------------------------------------ monitor

pub fn monitor(args: MonitorArgs, config: &Config) -> Result<()> {
    let model_path = config.required_path("model", args.model)?;
    config.check_input(&model_path)?;
    let vocab_path = config
        .path("vocab", args.vocab)
        .unwrap_or_else(|| model_path.with_extension("vocab.json"));
    config.check_input(&vocab_path)?;
    let stopwords = load_stopwords(config, args.stopwords)?;
    let weighting = weighting_of(config, args.raw_counts);
    let model = TrainedModel::load(&model_path)?;
    let vocab = Vocabulary::load(&vocab_path)?;
    let pipeline = Pipeline::new(model, vocab, stopwords, weighting)?;

    let keywords = match config.path("keywords_file", args.keywords_file) {
        Some(path) => {
            config.check_input(&path)?;
            KeywordSet::from_file(&path)?
        }
        None => monitor::KeywordSet::default_list().clone(),
    };

    let stop = if let Some(limit) = args.limit.or_else(|| {
        config.string("limit", None).and_then(|s| s.parse().ok())
    }) {
        StopBound::Events(limit)
    } else if let Some(secs) = args.duration_secs {
        StopBound::After(std::time::Duration::from_secs(secs))
    } else {
        StopBound::Exhausted
    };

    let live = config.flag("live", args.live);
    let replay = config.path("replay", args.replay);
    let stats = match (live, replay) {
        (true, _) => {
            let mut live_config =
                monitor::live::LiveConfig::new(keywords.keywords().to_vec());
            if let Some(token_env) = config.string("token_env", args.token_env) {
                live_config.token_env = token_env;
            }
            let mut source = monitor::live::LiveSource::connect(&live_config)?;
            run_with_sink(&mut source, &pipeline, &keywords, args.out.as_deref(), stop)?
        }
        (false, Some(path)) => {
            config.check_input(&path)?;
            let mut source = ReplaySource::open(&path)?;
            run_with_sink(&mut source, &pipeline, &keywords, args.out.as_deref(), stop)?
        }
        (false, None) => bail!("choose an event source: --replay FILE or --live"),
    };

    let stats_json = serde_json::to_string(&stats)?;
    match config.path("stats_out", args.stats_out) {
        Some(path) => {
            std::fs::write(&path, &stats_json)?;
            eprintln!("stats: {stats_json}");
        }
        None => println!("{stats_json}"),
    }
    Ok(())
}

fn run_with_sink<S: EventSource>(
    source: &mut S,
    pipeline: &Pipeline,
    keywords: &KeywordSet,
    out: Option<&Path>,
    stop: StopBound,
) -> Result<iotwatch_core::monitor::MonitorStats> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            let mut sink = JsonlSink::new(std::io::BufWriter::new(file));
            let stats = run_monitor(source, pipeline, keywords, &mut sink, stop)?;
            sink.into_inner().flush()?;
            Ok(stats)
        }
        None => {
            let stdout = std::io::stdout();
            let mut sink = JsonlSink::new(stdout.lock());
            Ok(run_monitor(source, pipeline, keywords, &mut sink, stop)?)
        }
    }
}

// ------------------------------------------------------------------ reproduce-table2

pub fn reproduce_table2(args: ReproduceArgs, config: &Config) -> Result<()> {
    let cve_path = config.required_path("cve_corpus", args.cve_corpus)?;
    config.check_input(&cve_path)?;
    let tweets_path = config.required_path("tweets", args.tweets)?;
    config.check_input(&tweets_path)?;
    let train_size = config.usize("train_size", args.train_size, DEFAULT_TRAIN_SIZE);
    let val_size = config.usize("val_size", args.val_size, DEFAULT_VAL_SIZE);
    let seed = config.u64("seed", args.seed, DEFAULT_SEED);
    let stopwords = load_stopwords(config, args.stopwords)?;

    let pool = read_corpus_file(&cve_path)?;
    let tweets = read_corpus_file(&tweets_path)?;
    let tweet_tokens = tokenize_corpus(&tweets, &stopwords);
    let tweet_labels = labels_of(&tweets);

    // Reference presentation order.
    let specs = [
        ModelSpec::rforest(),
        ModelSpec::dtree(),
        ModelSpec::multinomial_nb(),
        ModelSpec::logreg(),
        ModelSpec::svm(),
        ModelSpec::knn(),
    ];
    let mut rows = Vec::new();
    for variant in [Variant::NoCveTag, Variant::CveTagged] {
        let split = build_balanced_splits(&pool, train_size, val_size, seed, variant)?;
        let train_tokens = tokenize_corpus(&split.train, &stopwords);
        let vocab = Vocabulary::fit(&train_tokens)?;
        let x = FeatureMatrix::from_corpus(&train_tokens, &vocab, Weighting::TfIdf);
        let y = labels_of(&split.train);
        let tweets_x = FeatureMatrix::from_corpus(&tweet_tokens, &vocab, Weighting::TfIdf);
        for spec in &specs {
            let started = std::time::Instant::now();
            let model = train_model(spec, &x, &y, seed)?;
            let preds = model.predict_matrix(&tweets_x)?;
            let cm = ConfusionMatrix::from_predictions(&preds, &tweet_labels)?;
            let report = macro_metrics(&cm)?;
            eprintln!(
                "{} / {}: evaluated in {:.2}s",
                spec.kind(),
                variant,
                started.elapsed().as_secs_f64()
            );
            rows.push((spec.kind().to_string(), variant, report, cm));
        }
    }

    println!("classifier       variant     F1-score  Precision  Recall  Accuracy");
    for (kind, variant, report, _) in &rows {
        println!(
            "{kind:<16} {variant:<11} {:>8.4} {:>10.4} {:>7.4} {:>9.4}",
            trunc4(report.f1),
            trunc4(report.precision),
            trunc4(report.recall),
            trunc4(report.accuracy)
        );
    }
    let report_rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|(kind, variant, report, cm)| {
            json!({
                "kind": kind,
                "variant": variant.to_string(),
                "metrics": report,
                "confusion": cm,
            })
        })
        .collect();
    let doc = json!({
        "seed": seed,
        "train_size": train_size,
        "val_size": val_size,
        "rows": report_rows,
    });
    write_or_stdout(config.path("out", args.out).as_deref(), &doc.to_string())?;
    Ok(())
}
