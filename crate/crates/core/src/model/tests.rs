use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::corpus::Label;
use crate::features::{FeatureMatrix, FeatureVector};

fn sparse(dense: &[f64]) -> FeatureVector {
    FeatureVector {
        entries: dense
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect(),
    }
}

fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    let dim = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    FeatureMatrix::from_rows(rows.iter().map(|r| sparse(r)).collect(), dim)
}

fn dense_of(v: &FeatureVector, dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for &(c, w) in &v.entries {
        out[c] = w;
    }
    out
}

/// Random dataset with both labels present.
fn random_dataset(seed: u64, n: usize, dim: usize) -> (FeatureMatrix, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let mut labels: Vec<Label> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Label::Related
            } else {
                Label::Unrelated
            }
        })
        .collect();
    labels[0] = Label::Related;
    labels[1] = Label::Unrelated;
    (matrix(&rows), labels)
}

fn one_hot_pair() -> (FeatureMatrix, Vec<Label>) {
    (
        matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
        vec![Label::Related, Label::Unrelated],
    )
}

// ---------------------------------------------------------------- spec

#[test]
fn spec_validation_catches_bad_values() {
    assert!(ModelSpec::Logreg { c: 0.0 }.validate().is_err());
    assert!(ModelSpec::MultinomialNb { alpha: -1.0, fit_prior: true }.validate().is_err());
    assert!(ModelSpec::Knn { k: 4 }.validate().is_err());
    assert!(ModelSpec::Knn { k: 0 }.validate().is_err());
    assert!(ModelSpec::Dtree { min_samples_leaf: 0 }.validate().is_err());
    assert!(ModelSpec::Rforest { trees: 0, max_features: 0.75, bootstrap: true, min_samples_leaf: 1 }
        .validate()
        .is_err());
    assert!(ModelSpec::Rforest { trees: 10, max_features: 1.5, bootstrap: true, min_samples_leaf: 1 }
        .validate()
        .is_err());
    for spec in ModelSpec::all_defaults() {
        spec.validate().unwrap();
    }
}

#[test]
fn spec_kind_strings_round_trip() {
    for spec in ModelSpec::all_defaults() {
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains(&format!("\"kind\":\"{}\"", spec.kind())));
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!(ModelSpec::default_for_kind(spec.kind()), Some(spec));
    }
    // Omitted fields fall back to the stated defaults.
    let spec: ModelSpec = serde_json::from_str(r#"{"kind":"rforest"}"#).unwrap();
    assert_eq!(spec, ModelSpec::rforest());
}

#[test]
fn training_preconditions() {
    let (x, y) = one_hot_pair();
    assert!(matches!(
        train_model(&ModelSpec::logreg(), &x, &y[..1], 0),
        Err(Error::LengthMismatch { .. })
    ));
    assert!(matches!(
        train_model(&ModelSpec::logreg(), &x, &[Label::Related, Label::Related], 0),
        Err(Error::DegenerateLabels)
    ));
    let empty = FeatureMatrix::from_rows(
        vec![FeatureVector { entries: vec![] }, FeatureVector { entries: vec![] }],
        0,
    );
    assert!(matches!(
        train_model(&ModelSpec::logreg(), &empty, &y, 0),
        Err(Error::EmptyVocabulary)
    ));
}

#[test]
fn fingerprint_mismatch_is_rejected() {
    let (x, y) = one_hot_pair();
    let model = train_model(&ModelSpec::multinomial_nb(), &x, &y, 0).unwrap();
    let other = crate::features::Fingerprint::adhoc(99);
    assert!(matches!(
        model.predict_label(x.row(0), &other),
        Err(Error::VocabularyBinding { .. })
    ));
    assert!(model.predict_label(x.row(0), x.fingerprint()).is_ok());
}

#[test]
fn separable_memorization_for_every_kind() {
    let (x, y) = one_hot_pair();
    let specs = [
        ModelSpec::logreg(),
        ModelSpec::multinomial_nb(),
        ModelSpec::Dtree { min_samples_leaf: 1 },
        ModelSpec::Knn { k: 1 },
        ModelSpec::svm(),
        ModelSpec::Rforest { trees: 5, max_features: 1.0, bootstrap: false, min_samples_leaf: 1 },
    ];
    for spec in specs {
        let model = train_model(&spec, &x, &y, 7).unwrap();
        let preds = model.predict_matrix(&x).unwrap();
        assert_eq!(preds, y, "kind {}", spec.kind());
    }
}

#[test]
fn scores_and_labels_are_consistent() {
    let (x, y) = random_dataset(11, 30, 6);
    for spec in [
        ModelSpec::logreg(),
        ModelSpec::multinomial_nb(),
        ModelSpec::dtree(),
        ModelSpec::knn(),
        ModelSpec::svm(),
        ModelSpec::Rforest { trees: 15, max_features: 0.75, bootstrap: true, min_samples_leaf: 1 },
    ] {
        let model = train_model(&spec, &x, &y, 3).unwrap();
        let (qx, _) = random_dataset(12, 10, 6);
        for i in 0..qx.len() {
            let score = model.predict_score(qx.row(i), qx.fingerprint()).unwrap();
            let label = model.predict_label(qx.row(i), qx.fingerprint()).unwrap();
            assert!((0.0..=1.0).contains(&score), "kind {}", spec.kind());
            assert_eq!(label == Label::Related, score > 0.5);
            if label == Label::Related {
                assert!(score >= 0.5);
            }
        }
    }
}

#[test]
fn training_is_deterministic_and_round_trips() {
    let (x, y) = random_dataset(21, 24, 5);
    for spec in [
        ModelSpec::logreg(),
        ModelSpec::multinomial_nb(),
        ModelSpec::dtree(),
        ModelSpec::knn(),
        ModelSpec::svm(),
        ModelSpec::Rforest { trees: 9, max_features: 0.5, bootstrap: true, min_samples_leaf: 1 },
    ] {
        let a = train_model(&spec, &x, &y, 42).unwrap();
        let b = train_model(&spec, &x, &y, 42).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "kind {}", spec.kind());

        let reloaded = TrainedModel::from_json(&a.to_json()).unwrap();
        assert_eq!(reloaded.to_json(), a.to_json());
        let (qx, _) = random_dataset(22, 12, 5);
        for i in 0..qx.len() {
            let s1 = a.predict_score(qx.row(i), qx.fingerprint()).unwrap();
            let s2 = reloaded.predict_score(qx.row(i), qx.fingerprint()).unwrap();
            assert_eq!(s1.to_bits(), s2.to_bits(), "kind {}", spec.kind());
        }
    }
}

#[test]
fn model_file_rejects_bad_version_and_kind_mismatch() {
    let (x, y) = one_hot_pair();
    let model = train_model(&ModelSpec::multinomial_nb(), &x, &y, 0).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
    doc["format_version"] = serde_json::json!(99);
    assert!(matches!(
        TrainedModel::from_json(&doc.to_string()),
        Err(Error::ModelFormat(_))
    ));
    let mut doc: serde_json::Value = serde_json::from_str(&model.to_json()).unwrap();
    doc["spec"] = serde_json::json!({"kind": "knn", "k": 5});
    assert!(matches!(
        TrainedModel::from_json(&doc.to_string()),
        Err(Error::ModelFormat(_))
    ));
}

// ---------------------------------------------------------------- naive bayes

#[test]
fn nb_hand_computed_example() {
    // related doc "a a", unrelated doc "b b", raw counts.
    let x = matrix(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
    let y = vec![Label::Related, Label::Unrelated];
    let model = train_model(&ModelSpec::multinomial_nb(), &x, &y, 0).unwrap();

    let ModelState::MultinomialNb(state) = model.state_for_tests() else {
        panic!("wrong state kind");
    };
    let ll = state.log_likelihood();
    assert!((ll[0][0].exp() - 2.1 / 2.2).abs() < 1e-12);
    assert!((ll[1][0].exp() - 0.1 / 2.2).abs() < 1e-12);

    // Query "a": related wins under equal priors.
    let query = sparse(&[1.0, 0.0]);
    assert_eq!(model.predict_label(&query, x.fingerprint()).unwrap(), Label::Related);

    // Query with two occurrences of "a": direct Bayes value.
    let query2 = sparse(&[2.0, 0.0]);
    let score = model.predict_score(&query2, x.fingerprint()).unwrap();
    let lr = (2.1f64 / 2.2).powi(2);
    let lu = (0.1f64 / 2.2).powi(2);
    let expected = 0.5 * lr / (0.5 * lr + 0.5 * lu);
    assert!((score - expected).abs() < 1e-12, "{score} vs {expected}");
}

#[test]
fn nb_likelihoods_sum_to_one() {
    let (x, y) = random_dataset(31, 18, 4);
    let model = train_model(&ModelSpec::multinomial_nb(), &x, &y, 0).unwrap();
    let ModelState::MultinomialNb(state) = model.state_for_tests() else {
        panic!("wrong state kind");
    };
    for class in state.log_likelihood() {
        let total: f64 = class.iter().map(|l| l.exp()).sum();
        assert!((total - 1.0).abs() <= 1e-9, "sum {total}");
    }
}

/// Direct-computation oracle: products of smoothed likelihoods, no logs.
fn nb_oracle_margin(
    train: &[Vec<f64>],
    y: &[Label],
    alpha: f64,
    query: &[f64],
) -> (f64, f64) {
    let dim = train[0].len();
    let mut counts = [vec![0.0; dim], vec![0.0; dim]];
    let mut docs = [0.0f64; 2];
    for (row, &label) in train.iter().zip(y) {
        let c = if label == Label::Related { 0 } else { 1 };
        docs[c] += 1.0;
        for (d, &v) in row.iter().enumerate() {
            counts[c][d] += v;
        }
    }
    let mut posterior = [0.0f64; 2];
    for c in 0..2 {
        let total: f64 = counts[c].iter().sum();
        let mut likelihood = docs[c] / (docs[0] + docs[1]);
        for d in 0..dim {
            let p = (counts[c][d] + alpha) / (total + alpha * dim as f64);
            likelihood *= p.powf(query[d]);
        }
        posterior[c] = likelihood;
    }
    (posterior[0], posterior[1])
}

#[test]
fn nb_matches_direct_bayes_oracle_on_small_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0usize;
    for _ in 0..30 {
        let n = rng.gen_range(2..=5usize);
        let dim = rng.gen_range(1..=4usize);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(0..4) as f64).collect())
            .collect();
        let mut y: Vec<Label> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { Label::Related } else { Label::Unrelated })
            .collect();
        y[0] = Label::Related;
        y[n - 1] = Label::Unrelated;
        let x = matrix(&rows);
        let model = train_model(&ModelSpec::multinomial_nb(), &x, &y, 0).unwrap();
        // All 2^4 binary query documents over the first four columns.
        for bits in 0..16u32 {
            let query: Vec<f64> = (0..dim).map(|d| ((bits >> d) & 1) as f64).collect();
            let (rel, unr) = nb_oracle_margin(&rows, &y, 0.1, &query);
            if (rel.ln() - unr.ln()).abs() < 1e-9 {
                continue; // exact posterior tie; both routes are boundary cases
            }
            let oracle = if rel > unr { Label::Related } else { Label::Unrelated };
            let got = model.predict_label(&sparse(&query), x.fingerprint()).unwrap();
            assert_eq!(got, oracle, "corpus {rows:?} y {y:?} query {query:?}");
            checked += 1;
        }
    }
    assert!(checked > 300, "only {checked} comparisons ran");
}

// ---------------------------------------------------------------- logistic

#[test]
fn logreg_gradient_matches_central_differences() {
    let (x, y) = random_dataset(41, 20, 5);
    let c = 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: f64 = rng.gen_range(-2.0..2.0);
        let (gw, gb) = logistic::gradient(&w, b, &x, &y, c);
        let h = 1e-5;
        for i in 0..=5 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            let (mut bp, mut bm) = (b, b);
            if i < 5 {
                wp[i] += h;
                wm[i] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let numeric =
                (logistic::objective(&wp, bp, &x, &y, c) - logistic::objective(&wm, bm, &x, &y, c))
                    / (2.0 * h);
            let analytic = if i < 5 { gw[i] } else { gb };
            let scale = analytic.abs().max(numeric.abs()).max(1.0);
            assert!(
                (analytic - numeric).abs() / scale < 1e-5,
                "coord {i}: analytic {analytic} vs numeric {numeric}"
            );
        }
    }
}

#[test]
fn logreg_newton_reaches_small_gradient() {
    let (x, y) = random_dataset(43, 40, 6);
    let model = train_model(&ModelSpec::logreg(), &x, &y, 0).unwrap();
    let ModelState::Logreg(_) = model.state_for_tests() else {
        panic!("wrong kind");
    };
    // Training accuracy should beat chance on its own training set.
    let preds = model.predict_matrix(&x).unwrap();
    let correct = preds.iter().zip(&y).filter(|(p, t)| p == t).count();
    assert!(correct * 2 > y.len());
}

#[test]
fn logreg_constant_positive_bias_predicts_related() {
    let state = logistic::LogregState::new_for_tests(vec![0.0, 0.0], 0.7);
    let model = TrainedModel {
        spec: ModelSpec::logreg(),
        vocab_fingerprint: crate::features::Fingerprint::adhoc(2),
        state: ModelState::Logreg(state),
    };
    let fp = crate::features::Fingerprint::adhoc(2);
    for dense in [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.3, 0.9]] {
        assert_eq!(model.predict_label(&sparse(&dense), &fp).unwrap(), Label::Related);
    }
}

// ---------------------------------------------------------------- decision tree

/// Exhaustive, exact-rational gini enumeration. Gains are compared by
/// cross-multiplied integers so float rounding cannot reorder ties.
mod tree_oracle {
    use crate::corpus::Label;

    #[derive(Clone, Copy, Debug)]
    pub struct Split {
        pub feature: usize,
        pub threshold: f64,
        /// Q = (s_l * nr + s_r * nl, nl * nr), larger is better.
        pub q_num: u128,
        pub q_den: u128,
    }

    fn q_greater(a: (u128, u128), b: (u128, u128)) -> bool {
        a.0 * b.1 > b.0 * a.1
    }

    pub fn best_split(rows: &[Vec<f64>], y: &[Label], min_leaf: usize) -> Option<Split> {
        let n = rows.len();
        let dim = rows[0].len();
        let s_parent: u128 = {
            let rel = y.iter().filter(|&&l| l == Label::Related).count() as u128;
            let unr = n as u128 - rel;
            rel * rel + unr * unr
        };
        let mut best: Option<Split> = None;
        for feature in 0..dim {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| rows[a][feature].partial_cmp(&rows[b][feature]).unwrap());
            let mut left = [0u128; 2];
            for k in 0..n - 1 {
                let cls = if y[order[k]] == Label::Related { 0 } else { 1 };
                left[cls] += 1;
                let lo = rows[order[k]][feature];
                let hi = rows[order[k + 1]][feature];
                if lo == hi {
                    continue;
                }
                let nl = (k + 1) as u128;
                let nr = (n - k - 1) as u128;
                if (nl as usize) < min_leaf || (nr as usize) < min_leaf {
                    continue;
                }
                let rel_total = y.iter().filter(|&&l| l == Label::Related).count() as u128;
                let right = [rel_total - left[0], (n as u128 - rel_total) - left[1]];
                let s_l = left[0] * left[0] + left[1] * left[1];
                let s_r = right[0] * right[0] + right[1] * right[1];
                let q = (s_l * nr + s_r * nl, nl * nr);
                // Positive gain: Q > s_parent / n.
                if q.0 * n as u128 <= s_parent * q.1 {
                    continue;
                }
                let mut threshold = (lo + hi) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                if best.map_or(true, |b| q_greater(q, (b.q_num, b.q_den))) {
                    best = Some(Split {
                        feature,
                        threshold,
                        q_num: q.0,
                        q_den: q.1,
                    });
                }
            }
        }
        best
    }

    /// Exact Q for a concrete split, for comparing chosen splits.
    pub fn q_of(rows: &[Vec<f64>], y: &[Label], feature: usize, threshold: f64) -> (u128, u128) {
        let mut left = [0u128; 2];
        let mut right = [0u128; 2];
        for (row, &label) in rows.iter().zip(y) {
            let cls = if label == Label::Related { 0 } else { 1 };
            if row[feature] <= threshold {
                left[cls] += 1;
            } else {
                right[cls] += 1;
            }
        }
        let nl = left[0] + left[1];
        let nr = right[0] + right[1];
        let s_l = left[0] * left[0] + left[1] * left[1];
        let s_r = right[0] * right[0] + right[1] * right[1];
        (s_l * nr + s_r * nl, nl * nr)
    }
}

#[test]
fn dtree_root_split_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..40 {
        let n = rng.gen_range(4..=8usize);
        let dim = rng.gen_range(1..=3usize);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect())
            .collect();
        let mut y: Vec<Label> = (0..n)
            .map(|_| if rng.gen_bool(0.5) { Label::Related } else { Label::Unrelated })
            .collect();
        y[0] = Label::Related;
        y[1] = Label::Unrelated;
        let x = matrix(&rows);
        let model = train_model(&ModelSpec::Dtree { min_samples_leaf: 1 }, &x, &y, 0).unwrap();
        let (feature, threshold) = model.root_split().expect("impure root must split");
        let oracle = tree_oracle::best_split(&rows, &y, 1).expect("oracle finds a split");
        assert_eq!((feature, threshold), (oracle.feature, oracle.threshold), "case {case}");
        // The chosen split's exact gain equals the exhaustive maximum.
        let q = tree_oracle::q_of(&rows, &y, feature, threshold);
        assert_eq!(q.0 * oracle.q_den, oracle.q_num * q.1, "case {case}: gain differs");
    }
}

#[test]
fn dtree_tie_breaks_to_lowest_feature_then_threshold() {
    // Feature 1 duplicates feature 0: gains tie exactly, feature 0 must win.
    let rows = vec![
        vec![0.0, 0.0],
        vec![0.25, 0.25],
        vec![0.75, 0.75],
        vec![1.0, 1.0],
    ];
    let y = vec![Label::Related, Label::Related, Label::Unrelated, Label::Unrelated];
    let x = matrix(&rows);
    let model = train_model(&ModelSpec::Dtree { min_samples_leaf: 1 }, &x, &y, 0).unwrap();
    let (feature, threshold) = model.root_split().unwrap();
    assert_eq!(feature, 0);
    assert_eq!(threshold, 0.5);
}

#[test]
fn dtree_leaves_respect_min_samples_leaf() {
    for seed in [1u64, 2, 3] {
        let (x, y) = random_dataset(seed, 37, 4);
        let model = train_model(&ModelSpec::dtree(), &x, &y, 0).unwrap();
        let ModelState::Dtree(tree) = model.state_for_tests() else {
            panic!("wrong kind");
        };
        tree.for_each_leaf(|counts| {
            assert!(counts[0] + counts[1] >= 5, "leaf with {counts:?}");
        });
    }
}

// ---------------------------------------------------------------- knn

#[test]
fn knn_forced_majority() {
    let x = matrix(&[
        vec![1.0, 0.0],
        vec![0.9, 0.1],
        vec![0.8, 0.2],
        vec![0.0, 1.0],
        vec![0.1, 0.9],
    ]);
    let y = vec![
        Label::Related,
        Label::Related,
        Label::Related,
        Label::Unrelated,
        Label::Unrelated,
    ];
    let model = train_model(&ModelSpec::knn(), &x, &y, 0).unwrap();
    for dense in [vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5]] {
        assert_eq!(model.predict_label(&sparse(&dense), x.fingerprint()).unwrap(), Label::Related);
    }
}

#[test]
fn knn_distance_tie_prefers_lower_storage_index() {
    // Both training points are exactly distance 1 from the origin query.
    let x = matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
    for (labels, expected) in [
        (vec![Label::Related, Label::Unrelated], Label::Related),
        (vec![Label::Unrelated, Label::Related], Label::Unrelated),
    ] {
        let model = train_model(&ModelSpec::Knn { k: 1 }, &x, &labels, 0).unwrap();
        let query = sparse(&[0.0, 0.0]);
        assert_eq!(model.predict_label(&query, x.fingerprint()).unwrap(), expected);
    }
}

#[test]
fn knn_matches_full_sort_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..10 {
        let n = rng.gen_range(6..=50usize);
        let dim = rng.gen_range(2..=5usize);
        let (x, y) = random_dataset(rng.gen(), n, dim);
        let model = train_model(&ModelSpec::knn(), &x, &y, 0).unwrap();
        for _ in 0..8 {
            let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect();
            // Oracle: dense distances, full sort with (distance, index) order.
            let mut dists: Vec<(f64, usize)> = (0..n)
                .map(|i| {
                    let row = dense_of(x.row(i), dim);
                    let d2 = row.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                    (d2, i)
                })
                .collect();
            dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            let k = 5.min(n);
            let related = dists[..k].iter().filter(|&&(_, i)| y[i] == Label::Related).count();
            let oracle_score = related as f64 / k as f64;
            let score = model.predict_score(&sparse(&q), x.fingerprint()).unwrap();
            assert_eq!(score.to_bits(), oracle_score.to_bits());
        }
    }
}

// ---------------------------------------------------------------- svm

#[test]
fn svm_dual_feasibility() {
    for seed in [3u64, 17, 23] {
        let (x, y) = random_dataset(seed, 30, 5);
        let c = 1.0;
        let model = train_model(&ModelSpec::svm(), &x, &y, 0).unwrap();
        let (coefs, _bias) = model.svm_dual().unwrap();
        let mut sum = 0.0;
        for &coef in coefs {
            assert!(coef.abs() <= c + 1e-9, "alpha out of box: {coef}");
            sum += coef;
        }
        assert!(sum.abs() <= 1e-6, "sum alpha*y = {sum}");
    }
}

#[test]
fn svm_convergence_error_carries_gap() {
    let (x, y) = random_dataset(29, 40, 4);
    match svm::fit_capped(&x, &y, 1.0, 0.0, 1) {
        Err(Error::SmoConvergence { passes, gap }) => {
            assert_eq!(passes, 1);
            assert!(gap.is_finite());
        }
        other => panic!("expected convergence error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn svm_separates_clustered_data() {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for i in 0..20 {
        let related = i % 2 == 0;
        let base: Vec<f64> = if related { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
        rows.push(base.iter().map(|v| v + rng.gen_range(-0.05..0.05)).collect());
        y.push(if related { Label::Related } else { Label::Unrelated });
    }
    let x = matrix(&rows);
    let model = train_model(&ModelSpec::svm(), &x, &y, 0).unwrap();
    let preds = model.predict_matrix(&x).unwrap();
    let correct = preds.iter().zip(&y).filter(|(p, t)| p == t).count();
    assert!(correct >= 19, "svm training accuracy {correct}/20");
}

// ---------------------------------------------------------------- forest

#[test]
fn degenerate_forest_equals_single_tree() {
    for case in 0..20 {
        let (x, y) = random_dataset(100 + case, 25, 4);
        let forest_spec = ModelSpec::Rforest {
            trees: 1,
            max_features: 1.0,
            bootstrap: false,
            min_samples_leaf: 5,
        };
        let tree_spec = ModelSpec::Dtree { min_samples_leaf: 5 };
        let forest = train_model(&forest_spec, &x, &y, case).unwrap();
        let tree = train_model(&tree_spec, &x, &y, case).unwrap();
        let (qx, _) = random_dataset(200 + case, 15, 4);
        assert_eq!(
            forest.predict_matrix(&qx).unwrap(),
            tree.predict_matrix(&qx).unwrap(),
            "case {case}"
        );
    }
}

#[test]
fn default_forest_holds_exactly_300_trees() {
    let (x, y) = random_dataset(9, 12, 3);
    let model = train_model(&ModelSpec::rforest(), &x, &y, 0).unwrap();
    let ModelState::Rforest(state) = model.state_for_tests() else {
        panic!("wrong kind");
    };
    assert_eq!(state.trees().len(), 300);
}

#[test]
fn unanimous_forest_scores_one() {
    // Clearly separable data: every tree votes related deep in the related
    // cluster.
    let x = matrix(&[
        vec![1.0, 0.0],
        vec![0.9, 0.0],
        vec![0.95, 0.05],
        vec![0.0, 1.0],
        vec![0.0, 0.9],
        vec![0.05, 0.95],
    ]);
    let y = vec![
        Label::Related,
        Label::Related,
        Label::Related,
        Label::Unrelated,
        Label::Unrelated,
        Label::Unrelated,
    ];
    // bootstrap off keeps every tree two-class, so all 25 votes agree.
    let spec = ModelSpec::Rforest { trees: 25, max_features: 1.0, bootstrap: false, min_samples_leaf: 1 };
    let model = train_model(&spec, &x, &y, 13).unwrap();
    let score = model.predict_score(&sparse(&[1.0, 0.0]), x.fingerprint()).unwrap();
    assert_eq!(score, 1.0);
}

#[test]
fn forest_even_vote_tie_resolves_unrelated() {
    // Hand-assembled two-tree forest with opposing constant votes.
    let json = r#"{
        "format_version": 1,
        "spec": {"kind":"rforest","trees":2,"max_features":1.0,"bootstrap":false,"min_samples_leaf":1},
        "vocab_fingerprint": "adhoc:2",
        "state": {"kind":"rforest","trees":[
            {"nodes":[{"feature":null,"threshold":0.0,"left":0,"right":0,"counts":[1,0]}]},
            {"nodes":[{"feature":null,"threshold":0.0,"left":0,"right":0,"counts":[0,1]}]}
        ],"tree_seeds":[0,1]}
    }"#;
    let model = TrainedModel::from_json(json).unwrap();
    let fp = crate::features::Fingerprint::adhoc(2);
    let query = sparse(&[0.4, 0.6]);
    assert_eq!(model.predict_score(&query, &fp).unwrap(), 0.5);
    assert_eq!(model.predict_label(&query, &fp).unwrap(), Label::Unrelated);
}

#[test]
fn forest_parallel_and_seeded_runs_agree() {
    let (x, y) = random_dataset(71, 30, 4);
    let spec = ModelSpec::Rforest { trees: 32, max_features: 0.6, bootstrap: true, min_samples_leaf: 1 };
    let a = train_model(&spec, &x, &y, 5).unwrap();
    let b = train_model(&spec, &x, &y, 5).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let c = train_model(&spec, &x, &y, 6).unwrap();
    assert_ne!(a.to_json(), c.to_json());
}
