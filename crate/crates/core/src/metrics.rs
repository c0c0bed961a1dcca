//! Confusion-matrix accounting and macro-averaged metrics.
//!
//! The positive class is `related` throughout. Reported precision, recall and
//! F1 are unweighted means over the two classes (macro averaging); accuracy is
//! the plain correct fraction. Displayed values are truncated, not rounded, at
//! four decimals — that is the convention under which the published reference
//! counts and the reference score table agree.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// 2x2 counts with `related` as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl ConfusionMatrix {
    pub fn new(true_pos: u64, false_pos: u64, false_neg: u64, true_neg: u64) -> Self {
        Self {
            true_pos,
            false_pos,
            false_neg,
            true_neg,
        }
    }

    /// Tally predictions against ground truth.
    pub fn from_predictions(preds: &[Label], truth: &[Label]) -> Result<Self> {
        if preds.len() != truth.len() {
            return Err(Error::LengthMismatch {
                left: preds.len(),
                right: truth.len(),
            });
        }
        if preds.is_empty() {
            return Err(Error::EmptyInput("predictions"));
        }
        let mut cm = ConfusionMatrix::new(0, 0, 0, 0);
        for (&p, &t) in preds.iter().zip(truth) {
            match (p, t) {
                (Label::Related, Label::Related) => cm.true_pos += 1,
                (Label::Related, Label::Unrelated) => cm.false_pos += 1,
                (Label::Unrelated, Label::Related) => cm.false_neg += 1,
                (Label::Unrelated, Label::Unrelated) => cm.true_neg += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }
}

/// Precision/recall/F1 for one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Macro-averaged metrics plus the two per-class triples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub related: ClassMetrics,
    pub unrelated: ClassMetrics,
    /// True when any per-class ratio hit 0/0 and was reported as 0.
    pub degenerate: bool,
}

fn class_metrics(tp: u64, fp: u64, fn_: u64, degenerate: &mut bool) -> ClassMetrics {
    let mut ratio = |num: u64, den: u64| -> f64 {
        if den == 0 {
            *degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        *degenerate = true;
        0.0
    };
    ClassMetrics {
        precision,
        recall,
        f1,
    }
}

/// Macro metrics from a confusion matrix. Per-class 0/0 ratios are reported
/// as 0 and flagged in `degenerate`.
pub fn macro_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    if cm.total() == 0 {
        return Err(Error::EmptyInput("confusion matrix"));
    }
    let mut degenerate = false;
    let related = class_metrics(cm.true_pos, cm.false_pos, cm.false_neg, &mut degenerate);
    // Swap the positive class: TN becomes TP, FN/FP swap roles.
    let unrelated = class_metrics(cm.true_neg, cm.false_neg, cm.false_pos, &mut degenerate);
    Ok(MetricsReport {
        precision: (related.precision + unrelated.precision) / 2.0,
        recall: (related.recall + unrelated.recall) / 2.0,
        f1: (related.f1 + unrelated.f1) / 2.0,
        accuracy: (cm.true_pos + cm.true_neg) as f64 / cm.total() as f64,
        related,
        unrelated,
        degenerate,
    })
}

impl MetricsReport {
    /// Unweighted elementwise mean of several reports (used by k-fold CV).
    pub fn mean(reports: &[MetricsReport]) -> Result<MetricsReport> {
        if reports.is_empty() {
            return Err(Error::EmptyInput("reports"));
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        let avg_class = |pick: fn(&MetricsReport) -> ClassMetrics| ClassMetrics {
            precision: reports.iter().map(|r| pick(r).precision).sum::<f64>() / n,
            recall: reports.iter().map(|r| pick(r).recall).sum::<f64>() / n,
            f1: reports.iter().map(|r| pick(r).f1).sum::<f64>() / n,
        };
        Ok(MetricsReport {
            precision: avg(|r| r.precision),
            recall: avg(|r| r.recall),
            f1: avg(|r| r.f1),
            accuracy: avg(|r| r.accuracy),
            related: avg_class(|r| r.related),
            unrelated: avg_class(|r| r.unrelated),
            degenerate: reports.iter().any(|r| r.degenerate),
        })
    }

    /// Aligned text table in reference column order (F1, precision, recall,
    /// accuracy), values truncated to four decimals.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("           F1-score  Precision     Recall   Accuracy\n");
        out.push_str(&format!(
            "macro        {:.4}     {:.4}     {:.4}     {:.4}\n",
            trunc4(self.f1),
            trunc4(self.precision),
            trunc4(self.recall),
            trunc4(self.accuracy)
        ));
        out.push_str(&format!(
            "related      {:.4}     {:.4}     {:.4}\n",
            trunc4(self.related.f1),
            trunc4(self.related.precision),
            trunc4(self.related.recall)
        ));
        out.push_str(&format!(
            "unrelated    {:.4}     {:.4}     {:.4}\n",
            trunc4(self.unrelated.f1),
            trunc4(self.unrelated.precision),
            trunc4(self.unrelated.recall)
        ));
        out
    }
}

/// Truncate toward zero at four decimals.
pub fn trunc4(x: f64) -> f64 {
    (x * 10_000.0).floor() / 10_000.0
}
