//! K-nearest neighbors: stored training data, Euclidean metric, uniform
//! weights. Distance ties resolve to the lower storage index.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::features::{FeatureMatrix, FeatureVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct KnnState {
    rows: Vec<FeatureVector>,
    labels: Vec<Label>,
    k: usize,
}

pub(crate) fn fit(x: &FeatureMatrix, y: &[Label], k: usize) -> KnnState {
    KnnState {
        rows: x.rows().to_vec(),
        labels: y.to_vec(),
        k,
    }
}

impl KnnState {
    /// Fraction of related labels among the k nearest training points.
    pub(crate) fn score(&self, x: &FeatureVector) -> f64 {
        let mut distances: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| (row.squared_distance(x), i))
            .collect();
        distances.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let k = self.k.min(distances.len());
        let related = distances[..k]
            .iter()
            .filter(|&&(_, i)| self.labels[i] == Label::Related)
            .count();
        related as f64 / k as f64
    }
}
