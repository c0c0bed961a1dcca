//! 10-fold cross-validation and grid search.
//!
//! Folds are a seeded shuffle followed by contiguous chunking. Fold
//! complements train with seeds derived from the plan seed and the fold
//! index, so parallel execution and grid-cell order cannot change any
//! reported number.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::exec;
use crate::features::FeatureMatrix;
use crate::metrics::{macro_metrics, ConfusionMatrix, MetricsReport};
use crate::model::{train_model, ModelSpec};
use crate::seed::derive_seed;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-sample fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    assignments: Vec<usize>,
    k: usize,
    seed: u64,
}

impl FoldPlan {
    /// Seeded shuffle then contiguous chunking; the first `n % k` folds get
    /// the extra sample.
    pub fn new(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
        if k < 2 {
            return Err(Error::InvalidFoldPlan(format!("need k >= 2 folds, got {k}")));
        }
        if n < k {
            return Err(Error::FoldArity { n, k });
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut assignments = vec![0usize; n];
        let base = n / k;
        let extra = n % k;
        let mut cursor = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            for &sample in &order[cursor..cursor + size] {
                assignments[sample] = fold;
            }
            cursor += size;
        }
        Ok(FoldPlan { assignments, k, seed })
    }

    /// Wrap explicit assignments (tests, stratified experiments). Folds must
    /// partition the index set with sizes differing by at most one.
    pub fn from_assignments(assignments: Vec<usize>, k: usize, seed: u64) -> Result<FoldPlan> {
        if k < 2 {
            return Err(Error::InvalidFoldPlan(format!("need k >= 2 folds, got {k}")));
        }
        let mut sizes = vec![0usize; k];
        for &fold in &assignments {
            if fold >= k {
                return Err(Error::InvalidFoldPlan(format!("fold index {fold} out of range")));
            }
            sizes[fold] += 1;
        }
        let (min, max) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        if *min == 0 || max - min > 1 {
            return Err(Error::InvalidFoldPlan(format!("fold sizes {sizes:?} are unbalanced")));
        }
        Ok(FoldPlan { assignments, k, seed })
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn complement_indices(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// One fold's evaluation: the report plus the held-out predictions
/// (sample index, predicted label).
#[derive(Debug, Clone, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub report: MetricsReport,
    pub predictions: Vec<(usize, Label)>,
}

/// Cross-validation outcome: unweighted mean report over folds plus the
/// per-fold detail.
#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub mean: MetricsReport,
    pub folds: Vec<FoldResult>,
}

/// Train on each fold complement, evaluate on the fold, average the reports.
pub fn cross_validate(
    spec: &ModelSpec,
    x: &FeatureMatrix,
    y: &[Label],
    plan: &FoldPlan,
) -> Result<CrossValidation> {
    if plan.len() != y.len() || x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: plan.len(),
            right: y.len(),
        });
    }
    let outcomes: Vec<Result<FoldResult>> = exec::map_indexed(plan.k(), |fold| {
        let train_idx = plan.complement_indices(fold);
        let eval_idx = plan.fold_indices(fold);
        let train_y: Vec<Label> = train_idx.iter().map(|&i| y[i]).collect();
        let related = train_y.iter().filter(|&&l| l == Label::Related).count();
        if related == 0 || related == train_y.len() {
            return Err(Error::DegenerateFold { fold });
        }
        let train_x = x.select(&train_idx);
        let model = train_model(spec, &train_x, &train_y, derive_seed(plan.seed(), fold as u64))?;
        let eval_x = x.select(&eval_idx);
        let preds = model.predict_matrix(&eval_x)?;
        let truth: Vec<Label> = eval_idx.iter().map(|&i| y[i]).collect();
        let cm = ConfusionMatrix::from_predictions(&preds, &truth)?;
        Ok(FoldResult {
            fold,
            report: macro_metrics(&cm)?,
            predictions: eval_idx.into_iter().zip(preds).collect(),
        })
    });
    let mut folds = Vec::with_capacity(plan.k());
    for outcome in outcomes {
        folds.push(outcome?);
    }
    let reports: Vec<MetricsReport> = folds.iter().map(|f| f.report).collect();
    Ok(CrossValidation {
        mean: MetricsReport::mean(&reports)?,
        folds,
    })
}

/// Grid-search outcome: the full table and the selected spec.
#[derive(Debug, Clone, Serialize)]
pub struct GridResult {
    pub table: Vec<(ModelSpec, MetricsReport)>,
    pub best: ModelSpec,
}

/// Cross-validate every spec with the same plan and select the best mean
/// macro F1; ties go to the earliest declaration.
pub fn grid_search(
    grid: &[ModelSpec],
    x: &FeatureMatrix,
    y: &[Label],
    plan: &FoldPlan,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("grid"));
    }
    let cells: Vec<Result<MetricsReport>> = exec::map_items(grid, |spec| {
        cross_validate(spec, x, y, plan)
            .map(|cv| cv.mean)
            .map_err(|e| Error::GridCell {
                spec: serde_json::to_string(spec).unwrap_or_else(|_| spec.kind().into()),
                source: Box::new(e),
            })
    });
    let mut table = Vec::with_capacity(grid.len());
    for (spec, cell) in grid.iter().zip(cells) {
        table.push((spec.clone(), cell?));
    }
    let mut best = 0usize;
    for (i, (_, report)) in table.iter().enumerate().skip(1) {
        if report.f1 > table[best].1.f1 {
            best = i;
        }
    }
    Ok(GridResult {
        best: table[best].0.clone(),
        table,
    })
}

/// The built-in default grid: small neighborhoods around the reference
/// hyperparameters, which sit inside every axis.
pub fn default_grid() -> Vec<ModelSpec> {
    let mut grid = Vec::new();
    for c in [1.0, 10.0, 100.0] {
        grid.push(ModelSpec::Logreg { c });
    }
    for alpha in [0.01, 0.1, 1.0] {
        grid.push(ModelSpec::MultinomialNb { alpha, fit_prior: true });
    }
    for min_samples_leaf in [1usize, 5, 10] {
        grid.push(ModelSpec::Dtree { min_samples_leaf });
    }
    for k in [3usize, 5, 7] {
        grid.push(ModelSpec::Knn { k });
    }
    for c in [0.1, 1.0, 10.0] {
        grid.push(ModelSpec::Svm { c, coef0: 0.0 });
    }
    for trees in [100usize, 300, 500] {
        grid.push(ModelSpec::Rforest {
            trees,
            max_features: 0.75,
            bootstrap: true,
            min_samples_leaf: 1,
        });
    }
    grid
}

/// Expand a grid file: a JSON object mapping kind to parameter-name to a
/// list of values. Kinds and parameters expand in declaration order, the
/// last parameter varying fastest; empty parameter maps yield the kind's
/// default spec.
pub fn expand_grid_file(json: &str) -> Result<Vec<ModelSpec>> {
    let doc: Value = serde_json::from_str(json)?;
    let Value::Object(kinds) = doc else {
        return Err(Error::InvalidSpec("grid file must be a JSON object".into()));
    };
    let mut grid = Vec::new();
    for (kind, params) in kinds {
        let base = ModelSpec::default_for_kind(&kind)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown kind {kind:?}")))?;
        let Value::Object(params) = params else {
            return Err(Error::InvalidSpec(format!("{kind}: parameters must be an object")));
        };
        let axes: Vec<(String, Vec<Value>)> = params
            .into_iter()
            .map(|(name, values)| match values {
                Value::Array(vs) if !vs.is_empty() => Ok((name, vs)),
                _ => Err(Error::InvalidSpec(format!(
                    "{kind}.{name}: expected a non-empty list of values"
                ))),
            })
            .collect::<Result<_>>()?;
        let mut combos: Vec<Vec<(String, Value)>> = vec![Vec::new()];
        for (name, values) in &axes {
            let mut next = Vec::with_capacity(combos.len() * values.len());
            for combo in &combos {
                for value in values {
                    let mut extended = combo.clone();
                    extended.push((name.clone(), value.clone()));
                    next.push(extended);
                }
            }
            combos = next;
        }
        for combo in combos {
            let mut spec = serde_json::to_value(&base)?;
            for (name, value) in combo {
                let field = spec
                    .get_mut(&name)
                    .ok_or_else(|| Error::InvalidSpec(format!("{kind}: unknown parameter {name:?}")))?;
                *field = value;
            }
            let spec: ModelSpec = serde_json::from_value(spec)?;
            spec.validate()?;
            grid.push(spec);
        }
    }
    if grid.is_empty() {
        return Err(Error::EmptyInput("grid"));
    }
    Ok(grid)
}
