//! Greedy gini decision tree shared by the `dtree` and `rforest` kinds.
//!
//! Growth stops at purity or the leaf-size floor: a split is considered only
//! if both children keep at least `min_samples_leaf` samples and it strictly
//! improves gini. Ties resolve to the lowest feature index, then the lowest
//! threshold. With `max_features` set, each split examines a random subset of
//! features drawn without replacement (evaluated in ascending index order, so
//! a full subset behaves exactly like a plain tree).

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::features::{FeatureMatrix, FeatureVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct TreeNode {
    /// `None` marks a leaf.
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    /// Training samples at this node: `[related, unrelated]`.
    pub counts: [u64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree {
    pub nodes: Vec<TreeNode>,
}

pub(crate) struct TreeParams {
    pub min_samples_leaf: usize,
    /// Fraction of features sampled per split; `None` examines all.
    pub max_features: Option<f64>,
}

fn class_slot(label: Label) -> usize {
    match label {
        Label::Related => 0,
        Label::Unrelated => 1,
    }
}

fn gini(counts: &[u64; 2]) -> f64 {
    let total = (counts[0] + counts[1]) as f64;
    if total == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / total;
    let p1 = counts[1] as f64 / total;
    1.0 - p0 * p0 - p1 * p1
}

struct Builder<'a> {
    x: &'a FeatureMatrix,
    y: &'a [Label],
    params: &'a TreeParams,
    rng: Option<ChaCha8Rng>,
    nodes: Vec<TreeNode>,
}

/// Best split at one node: `(feature, threshold, gain)`.
pub(crate) fn best_split(
    x: &FeatureMatrix,
    y: &[Label],
    samples: &[usize],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let n = samples.len();
    let mut parent = [0u64; 2];
    for &i in samples {
        parent[class_slot(y[i])] += 1;
    }
    let parent_gini = gini(&parent);
    let mut best: Option<(usize, f64, f64)> = None;
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &feature in candidates {
        column.clear();
        column.extend(
            samples
                .iter()
                .map(|&i| (x.row(i).value(feature), class_slot(y[i]))),
        );
        column.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut left = [0u64; 2];
        for k in 0..n - 1 {
            left[column[k].1] += 1;
            if column[k].0 == column[k + 1].0 {
                continue;
            }
            let n_left = k + 1;
            let n_right = n - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let right = [parent[0] - left[0], parent[1] - left[1]];
            let weighted = (n_left as f64 * gini(&left) + n_right as f64 * gini(&right)) / n as f64;
            let gain = parent_gini - weighted;
            if gain <= 0.0 {
                continue;
            }
            let lo = column[k].0;
            let hi = column[k + 1].0;
            let mut threshold = (lo + hi) / 2.0;
            if threshold >= hi {
                // Midpoint rounded up to the right value; fall back to the
                // left value so routing matches the scan.
                threshold = lo;
            }
            if best.map_or(true, |(_, _, g)| gain > g) {
                best = Some((feature, threshold, gain));
            }
        }
    }
    best
}

impl Builder<'_> {
    fn candidates(&mut self) -> Vec<usize> {
        let dim = self.x.dim();
        match (self.params.max_features, self.rng.as_mut()) {
            (Some(fraction), Some(rng)) => {
                let m = ((fraction * dim as f64).floor() as usize).max(1).min(dim);
                let mut pool: Vec<usize> = (0..dim).collect();
                for i in 0..m {
                    let j = rng.gen_range(i..dim);
                    pool.swap(i, j);
                }
                let mut subset = pool[..m].to_vec();
                subset.sort_unstable();
                subset
            }
            _ => (0..dim).collect(),
        }
    }

    fn grow(&mut self, samples: Vec<usize>) -> usize {
        let mut counts = [0u64; 2];
        for &i in &samples {
            counts[class_slot(self.y[i])] += 1;
        }
        let node_index = self.nodes.len();
        self.nodes.push(TreeNode {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            counts,
        });
        let pure = counts[0] == 0 || counts[1] == 0;
        let splittable = samples.len() >= 2 * self.params.min_samples_leaf && samples.len() >= 2;
        if pure || !splittable {
            return node_index;
        }
        let candidates = self.candidates();
        let Some((feature, threshold, _gain)) = best_split(
            self.x,
            self.y,
            &samples,
            &candidates,
            self.params.min_samples_leaf,
        ) else {
            return node_index;
        };
        let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&i| self.x.row(i).value(feature) <= threshold);
        let left = self.grow(left_samples);
        let right = self.grow(right_samples);
        let node = &mut self.nodes[node_index];
        node.feature = Some(feature);
        node.threshold = threshold;
        node.left = left;
        node.right = right;
        node_index
    }
}

/// Fit a tree on the given sample indices (which may repeat, for bootstrap).
pub(crate) fn fit(
    x: &FeatureMatrix,
    y: &[Label],
    samples: &[usize],
    params: &TreeParams,
    rng: Option<ChaCha8Rng>,
) -> Tree {
    let mut builder = Builder {
        x,
        y,
        params,
        rng,
        nodes: Vec::new(),
    };
    builder.grow(samples.to_vec());
    Tree {
        nodes: builder.nodes,
    }
}

impl Tree {
    fn leaf_for(&self, x: &FeatureVector) -> &TreeNode {
        let mut node = &self.nodes[0];
        while let Some(feature) = node.feature {
            node = if x.value(feature) <= node.threshold {
                &self.nodes[node.left]
            } else {
                &self.nodes[node.right]
            };
        }
        node
    }

    /// Fraction of related training samples in the routed leaf.
    pub(crate) fn related_fraction(&self, x: &FeatureVector) -> f64 {
        let counts = self.leaf_for(x).counts;
        counts[0] as f64 / (counts[0] + counts[1]) as f64
    }

    /// This tree's hard vote.
    pub(crate) fn vote(&self, x: &FeatureVector) -> Label {
        if self.related_fraction(x) > 0.5 {
            Label::Related
        } else {
            Label::Unrelated
        }
    }

    pub(crate) fn root_split(&self) -> Option<(usize, f64)> {
        let root = &self.nodes[0];
        root.feature.map(|f| (f, root.threshold))
    }

    /// Visit every leaf's training-sample counts.
    #[cfg(test)]
    pub(crate) fn for_each_leaf(&self, mut f: impl FnMut(&[u64; 2])) {
        for node in &self.nodes {
            if node.feature.is_none() {
                f(&node.counts);
            }
        }
    }
}
