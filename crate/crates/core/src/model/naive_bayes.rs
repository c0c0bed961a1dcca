//! Multinomial naive Bayes with Lidstone smoothing.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::features::{FeatureMatrix, FeatureVector};

use super::sigmoid;

/// Index 0 holds the `related` class, index 1 `unrelated`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct NbState {
    log_prior: [f64; 2],
    log_likelihood: [Vec<f64>; 2],
}

fn class_index(label: Label) -> usize {
    match label {
        Label::Related => 0,
        Label::Unrelated => 1,
    }
}

pub(crate) fn fit(x: &FeatureMatrix, y: &[Label], alpha: f64, fit_prior: bool) -> NbState {
    let dim = x.dim();
    let mut counts = [vec![0.0f64; dim], vec![0.0f64; dim]];
    let mut doc_counts = [0usize; 2];
    for (row, &label) in x.rows().iter().zip(y) {
        let c = class_index(label);
        doc_counts[c] += 1;
        for &(col, value) in &row.entries {
            counts[c][col] += value;
        }
    }
    let n = y.len() as f64;
    let log_prior = if fit_prior {
        [
            (doc_counts[0] as f64 / n).ln(),
            (doc_counts[1] as f64 / n).ln(),
        ]
    } else {
        [(0.5f64).ln(), (0.5f64).ln()]
    };
    let mut log_likelihood = [vec![0.0; dim], vec![0.0; dim]];
    for c in 0..2 {
        let total: f64 = counts[c].iter().sum();
        let denom = total + alpha * dim as f64;
        for col in 0..dim {
            log_likelihood[c][col] = ((counts[c][col] + alpha) / denom).ln();
        }
    }
    NbState {
        log_prior,
        log_likelihood,
    }
}

impl NbState {
    /// P(related | x) via the two-class posterior.
    pub(crate) fn score(&self, x: &FeatureVector) -> f64 {
        let joint = |c: usize| -> f64 {
            let mut acc = self.log_prior[c];
            for &(col, value) in &x.entries {
                if col < self.log_likelihood[c].len() {
                    acc += value * self.log_likelihood[c][col];
                }
            }
            acc
        };
        sigmoid(joint(0) - joint(1))
    }

    #[cfg(test)]
    pub(crate) fn log_likelihood(&self) -> &[Vec<f64>; 2] {
        &self.log_likelihood
    }
}
