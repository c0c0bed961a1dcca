//! The six classifiers behind one train/predict contract.
//!
//! Scores are P(related | x) or a vote/neighbor fraction depending on the
//! kind; the predicted label is `related` exactly when the score exceeds 0.5,
//! so ties at the boundary resolve to `unrelated` for every kind.

pub mod forest;
pub mod knn;
pub mod logistic;
pub mod naive_bayes;
pub mod svm;
mod tree;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::exec;
use crate::features::{FeatureMatrix, FeatureVector, Fingerprint};

pub(crate) use tree::TreeParams;

/// Iteration cap for the logistic-regression Newton solver.
pub const LOGREG_MAX_ITER: usize = 100;
/// Gradient-norm stopping tolerance for the Newton solver.
pub const LOGREG_GRAD_TOL: f64 = 1e-6;
/// KKT working-set tolerance for the SMO solver.
pub const SMO_TOL: f64 = 1e-3;
/// Pass cap for the SMO solver.
pub const SMO_MAX_PASSES: u32 = 10_000;

const FORMAT_VERSION: u32 = 1;

/// Numerically stable logistic function.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A classifier kind with its hyperparameters. Unlisted knobs (solver type,
/// split criterion, distance metric, kernel) are fixed; see the defaults
/// table in the README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// L2-regularized logistic regression, Newton solver.
    Logreg {
        #[serde(default = "defaults::logreg_c")]
        c: f64,
    },
    /// Multinomial naive Bayes with Lidstone smoothing.
    MultinomialNb {
        #[serde(default = "defaults::nb_alpha")]
        alpha: f64,
        #[serde(default = "defaults::yes")]
        fit_prior: bool,
    },
    /// Gini decision tree.
    Dtree {
        #[serde(default = "defaults::dtree_min_samples_leaf")]
        min_samples_leaf: usize,
    },
    /// K-nearest neighbors, uniform weights, Euclidean metric.
    Knn {
        #[serde(default = "defaults::knn_k")]
        k: usize,
    },
    /// Sigmoid-kernel SVM trained by SMO, gamma = scale.
    Svm {
        #[serde(default = "defaults::svm_c")]
        c: f64,
        #[serde(default)]
        coef0: f64,
    },
    /// Bootstrap-aggregated gini trees with per-split feature sampling.
    Rforest {
        #[serde(default = "defaults::rforest_trees")]
        trees: usize,
        #[serde(default = "defaults::rforest_max_features")]
        max_features: f64,
        #[serde(default = "defaults::yes")]
        bootstrap: bool,
        #[serde(default = "defaults::rforest_min_samples_leaf")]
        min_samples_leaf: usize,
    },
}

mod defaults {
    pub fn logreg_c() -> f64 {
        10.0
    }
    pub fn nb_alpha() -> f64 {
        0.1
    }
    pub fn yes() -> bool {
        true
    }
    pub fn dtree_min_samples_leaf() -> usize {
        5
    }
    pub fn knn_k() -> usize {
        5
    }
    pub fn svm_c() -> f64 {
        1.0
    }
    pub fn rforest_trees() -> usize {
        300
    }
    pub fn rforest_max_features() -> f64 {
        0.75
    }
    pub fn rforest_min_samples_leaf() -> usize {
        1
    }
}

impl ModelSpec {
    pub fn logreg() -> Self {
        ModelSpec::Logreg { c: defaults::logreg_c() }
    }

    pub fn multinomial_nb() -> Self {
        ModelSpec::MultinomialNb {
            alpha: defaults::nb_alpha(),
            fit_prior: true,
        }
    }

    pub fn dtree() -> Self {
        ModelSpec::Dtree {
            min_samples_leaf: defaults::dtree_min_samples_leaf(),
        }
    }

    pub fn knn() -> Self {
        ModelSpec::Knn { k: defaults::knn_k() }
    }

    pub fn svm() -> Self {
        ModelSpec::Svm {
            c: defaults::svm_c(),
            coef0: 0.0,
        }
    }

    pub fn rforest() -> Self {
        ModelSpec::Rforest {
            trees: defaults::rforest_trees(),
            max_features: defaults::rforest_max_features(),
            bootstrap: true,
            min_samples_leaf: defaults::rforest_min_samples_leaf(),
        }
    }

    /// The six default specs in presentation order.
    pub fn all_defaults() -> Vec<ModelSpec> {
        vec![
            ModelSpec::logreg(),
            ModelSpec::multinomial_nb(),
            ModelSpec::dtree(),
            ModelSpec::knn(),
            ModelSpec::svm(),
            ModelSpec::rforest(),
        ]
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Logreg { .. } => "logreg",
            ModelSpec::MultinomialNb { .. } => "multinomial_nb",
            ModelSpec::Dtree { .. } => "dtree",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::Svm { .. } => "svm",
            ModelSpec::Rforest { .. } => "rforest",
        }
    }

    pub fn default_for_kind(kind: &str) -> Option<ModelSpec> {
        match kind {
            "logreg" => Some(ModelSpec::logreg()),
            "multinomial_nb" => Some(ModelSpec::multinomial_nb()),
            "dtree" => Some(ModelSpec::dtree()),
            "knn" => Some(ModelSpec::knn()),
            "svm" => Some(ModelSpec::svm()),
            "rforest" => Some(ModelSpec::rforest()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match *self {
            ModelSpec::Logreg { c } => {
                if c <= 0.0 || !c.is_finite() {
                    return bad(format!("logreg c must be positive, got {c}"));
                }
            }
            ModelSpec::MultinomialNb { alpha, .. } => {
                if alpha <= 0.0 || !alpha.is_finite() {
                    return bad(format!("nb alpha must be positive, got {alpha}"));
                }
            }
            ModelSpec::Dtree { min_samples_leaf } => {
                if min_samples_leaf == 0 {
                    return bad("dtree min_samples_leaf must be positive".into());
                }
            }
            ModelSpec::Knn { k } => {
                if k == 0 {
                    return bad("knn k must be positive".into());
                }
                if k % 2 == 0 {
                    return bad(format!("knn k must be odd to avoid binary ties, got {k}"));
                }
            }
            ModelSpec::Svm { c, coef0 } => {
                if c <= 0.0 || !c.is_finite() {
                    return bad(format!("svm c must be positive, got {c}"));
                }
                if !coef0.is_finite() {
                    return bad("svm coef0 must be finite".into());
                }
            }
            ModelSpec::Rforest {
                trees,
                max_features,
                min_samples_leaf,
                ..
            } => {
                if trees == 0 {
                    return bad("rforest trees must be positive".into());
                }
                if !(max_features > 0.0 && max_features <= 1.0) {
                    return bad(format!("rforest max_features must be in (0,1], got {max_features}"));
                }
                if min_samples_leaf == 0 {
                    return bad("rforest min_samples_leaf must be positive".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ModelState {
    Logreg(logistic::LogregState),
    MultinomialNb(naive_bayes::NbState),
    Dtree(tree::Tree),
    Knn(knn::KnnState),
    Svm(svm::SvmState),
    Rforest(forest::ForestState),
}

/// An immutable fitted classifier bound to its vocabulary by fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    spec: ModelSpec,
    vocab_fingerprint: Fingerprint,
    state: ModelState,
}

/// Versioned on-disk envelope.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    spec: ModelSpec,
    vocab_fingerprint: Fingerprint,
    state: ModelState,
}

/// Fit a model. The seed drives any randomized internals (forest bootstrap
/// and per-split feature subsets); all other kinds are deterministic and
/// ignore it.
pub fn train_model(spec: &ModelSpec, x: &FeatureMatrix, y: &[Label], seed: u64) -> Result<TrainedModel> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::EmptyInput("need at least 2 training samples"));
    }
    if x.dim() == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let related = y.iter().filter(|&&l| l == Label::Related).count();
    if related == 0 || related == y.len() {
        return Err(Error::DegenerateLabels);
    }

    let state = match *spec {
        ModelSpec::Logreg { c } => ModelState::Logreg(logistic::fit(x, y, c)),
        ModelSpec::MultinomialNb { alpha, fit_prior } => {
            ModelState::MultinomialNb(naive_bayes::fit(x, y, alpha, fit_prior))
        }
        ModelSpec::Dtree { min_samples_leaf } => {
            let indices: Vec<usize> = (0..x.len()).collect();
            let params = TreeParams {
                min_samples_leaf,
                max_features: None,
            };
            ModelState::Dtree(tree::fit(x, y, &indices, &params, None))
        }
        ModelSpec::Knn { k } => ModelState::Knn(knn::fit(x, y, k)),
        ModelSpec::Svm { c, coef0 } => ModelState::Svm(svm::fit(x, y, c, coef0)?),
        ModelSpec::Rforest {
            trees,
            max_features,
            bootstrap,
            min_samples_leaf,
        } => ModelState::Rforest(forest::fit(
            x,
            y,
            &forest::ForestParams {
                trees,
                max_features,
                bootstrap,
                min_samples_leaf,
            },
            seed,
        )),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        vocab_fingerprint: x.fingerprint().clone(),
        state,
    })
}

impl TrainedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn vocab_fingerprint(&self) -> &Fingerprint {
        &self.vocab_fingerprint
    }

    fn check_binding(&self, fingerprint: &Fingerprint) -> Result<()> {
        if &self.vocab_fingerprint != fingerprint {
            return Err(Error::VocabularyBinding {
                model: self.vocab_fingerprint.to_string(),
                data: fingerprint.to_string(),
            });
        }
        Ok(())
    }

    fn score_unchecked(&self, x: &FeatureVector) -> f64 {
        match &self.state {
            ModelState::Logreg(state) => state.score(x),
            ModelState::MultinomialNb(state) => state.score(x),
            ModelState::Dtree(tree) => tree.related_fraction(x),
            ModelState::Knn(state) => state.score(x),
            ModelState::Svm(state) => state.score(x),
            ModelState::Rforest(state) => state.score(x),
        }
    }

    /// P(related | x), a vote fraction or a squashed decision value,
    /// depending on the kind. Always in [0, 1].
    pub fn predict_score(&self, x: &FeatureVector, fingerprint: &Fingerprint) -> Result<f64> {
        self.check_binding(fingerprint)?;
        Ok(self.score_unchecked(x))
    }

    /// Predicted label: `related` exactly when the score exceeds 0.5.
    pub fn predict_label(&self, x: &FeatureVector, fingerprint: &Fingerprint) -> Result<Label> {
        Ok(Self::label_from_score(self.predict_score(x, fingerprint)?))
    }

    pub fn label_from_score(score: f64) -> Label {
        if score > 0.5 {
            Label::Related
        } else {
            Label::Unrelated
        }
    }

    /// Batch prediction over a matrix (parallel when enabled).
    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<Label>> {
        self.check_binding(x.fingerprint())?;
        Ok(exec::map_items(x.rows(), |row| {
            Self::label_from_score(self.score_unchecked(row))
        }))
    }

    pub fn score_matrix(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_binding(x.fingerprint())?;
        Ok(exec::map_items(x.rows(), |row| self.score_unchecked(row)))
    }

    /// For tree models, the root split as `(feature, threshold)`; `None` for
    /// other kinds or when the root is a leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match &self.state {
            ModelState::Dtree(tree) => tree.root_split(),
            _ => None,
        }
    }

    /// For SVM models, the dual coefficients (`alpha_i * y_i`) and bias.
    pub fn svm_dual(&self) -> Option<(&[f64], f64)> {
        match &self.state {
            ModelState::Svm(state) => Some((state.dual_coef(), state.bias())),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            spec: self.spec.clone(),
            vocab_fingerprint: self.vocab_fingerprint.clone(),
            state: self.state.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<TrainedModel> {
        let file: ModelFile = serde_json::from_str(json)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        let model = TrainedModel {
            spec: file.spec,
            vocab_fingerprint: file.vocab_fingerprint,
            state: file.state,
        };
        if model.spec.kind() != model.state_kind() {
            return Err(Error::ModelFormat(format!(
                "spec kind {} does not match state kind {}",
                model.spec.kind(),
                model.state_kind()
            )));
        }
        Ok(model)
    }

    fn state_kind(&self) -> &'static str {
        match &self.state {
            ModelState::Logreg(_) => "logreg",
            ModelState::MultinomialNb(_) => "multinomial_nb",
            ModelState::Dtree(_) => "dtree",
            ModelState::Knn(_) => "knn",
            ModelState::Svm(_) => "svm",
            ModelState::Rforest(_) => "rforest",
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &std::path::Path) -> Result<TrainedModel> {
        let bytes = std::fs::read(path)?;
        TrainedModel::from_json(&String::from_utf8_lossy(&bytes))
    }

    #[cfg(test)]
    pub(crate) fn state_for_tests(&self) -> &ModelState {
        &self.state
    }
}

#[cfg(test)]
mod tests;
