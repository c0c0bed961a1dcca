//! Bootstrap-aggregated gini trees with per-split feature sampling.
//!
//! Tree `i` is trained with its own seed, `master XOR splitmix64(i)`, so
//! trees can be fitted in parallel in any order and the forest is still a
//! pure function of `(spec, data, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::exec;
use crate::features::{FeatureMatrix, FeatureVector};
use crate::seed::derive_seed;

use super::tree::{self, Tree, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ForestState {
    trees: Vec<Tree>,
    tree_seeds: Vec<u64>,
}

pub(crate) struct ForestParams {
    pub trees: usize,
    pub max_features: f64,
    pub bootstrap: bool,
    pub min_samples_leaf: usize,
}

pub(crate) fn fit(x: &FeatureMatrix, y: &[Label], params: &ForestParams, seed: u64) -> ForestState {
    let n = x.len();
    let tree_seeds: Vec<u64> = (0..params.trees as u64).map(|i| derive_seed(seed, i)).collect();
    let trees = exec::map_indexed(params.trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seeds[t]);
        let samples: Vec<usize> = if params.bootstrap {
            (0..n).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        let tree_params = TreeParams {
            min_samples_leaf: params.min_samples_leaf,
            max_features: Some(params.max_features),
        };
        tree::fit(x, y, &samples, &tree_params, Some(rng))
    });
    ForestState { trees, tree_seeds }
}

impl ForestState {
    /// Fraction of trees voting related.
    pub(crate) fn score(&self, x: &FeatureVector) -> f64 {
        let related = self
            .trees
            .iter()
            .filter(|t| t.vote(x) == Label::Related)
            .count();
        related as f64 / self.trees.len() as f64
    }

    #[cfg(test)]
    pub(crate) fn trees(&self) -> &[Tree] {
        &self.trees
    }
}
