//! Crate-wide error type.

use thiserror::Error;

use crate::corpus::Label;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("feed parse error: {0}")]
    FeedParse(String),

    #[error("corpus line {line}: {reason}")]
    CorpusLoad { line: usize, reason: String },

    #[error("split sizes must be even, got train={train} validation={validation}")]
    OddSplitSize { train: usize, validation: usize },

    #[error("not enough {label} docs: need {needed}, pool has {available}")]
    Capacity {
        label: Label,
        needed: usize,
        available: usize,
    },

    #[error("duplicate doc_id in pool: {0}")]
    DuplicateDocId(String),

    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,

    #[error("feature space is empty")]
    EmptyVocabulary,

    #[error("training labels are single-class")]
    DegenerateLabels,

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("smo did not converge after {passes} passes (kkt gap {gap:.6e})")]
    SmoConvergence { passes: u32, gap: f64 },

    #[error("model is bound to vocabulary {model}, data came from {data}")]
    VocabularyBinding { model: String, data: String },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("need at least k={k} samples for {k} folds, got {n}")]
    FoldArity { n: usize, k: usize },

    #[error("invalid fold plan: {0}")]
    InvalidFoldPlan(String),

    #[error("fold {fold} leaves a single-class training set")]
    DegenerateFold { fold: usize },

    #[error("grid cell {spec}: {source}")]
    GridCell {
        spec: String,
        #[source]
        source: Box<Error>,
    },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("monitor run aborted: {reason}")]
    MonitorAborted {
        reason: String,
        stats: Box<crate::monitor::MonitorStats>,
    },

    #[error("live stream: {0}")]
    Live(String),
}

pub type Result<T> = std::result::Result<T, Error>;
