//! L2-regularized logistic regression fit by a truncated Newton method.
//!
//! Minimizes `0.5*||w||^2 + C * sum_i log(1 + exp(-y_i * (w.x_i + b)))` with
//! y in {-1, +1} (`related` is +1); the bias is unregularized. Newton steps
//! are solved by conjugate gradients on Hessian-vector products, so the
//! Hessian is never materialized.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::features::{FeatureMatrix, FeatureVector};

use super::{sigmoid, LOGREG_GRAD_TOL, LOGREG_MAX_ITER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct LogregState {
    weights: Vec<f64>,
    bias: f64,
}

fn signed(label: Label) -> f64 {
    match label {
        Label::Related => 1.0,
        Label::Unrelated => -1.0,
    }
}

/// log(1 + exp(-m)) without overflow.
fn log1p_exp_neg(m: f64) -> f64 {
    if m >= 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

fn margins(weights: &[f64], bias: f64, x: &FeatureMatrix) -> Vec<f64> {
    x.rows()
        .iter()
        .map(|row| {
            let mut z = bias;
            for &(col, value) in &row.entries {
                z += weights[col] * value;
            }
            z
        })
        .collect()
}

/// The training objective at `(weights, bias)`.
pub fn objective(weights: &[f64], bias: f64, x: &FeatureMatrix, y: &[Label], c: f64) -> f64 {
    let reg: f64 = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
    let loss: f64 = margins(weights, bias, x)
        .iter()
        .zip(y)
        .map(|(&z, &label)| log1p_exp_neg(signed(label) * z))
        .sum();
    reg + c * loss
}

/// Analytic gradient of [`objective`]; returns `(d/dw, d/db)`.
pub fn gradient(weights: &[f64], bias: f64, x: &FeatureMatrix, y: &[Label], c: f64) -> (Vec<f64>, f64) {
    let mut grad_w = weights.to_vec();
    let mut grad_b = 0.0;
    for ((row, &label), &z) in x.rows().iter().zip(y).zip(&margins(weights, bias, x)) {
        let ys = signed(label);
        // d/dz log(1+exp(-y z)) = -y * sigmoid(-y z)
        let coeff = c * -ys * sigmoid(-ys * z);
        for &(col, value) in &row.entries {
            grad_w[col] += coeff * value;
        }
        grad_b += coeff;
    }
    (grad_w, grad_b)
}

/// Hessian-vector product at the current margins. `curvature[i]` is
/// `sigmoid(z_i) * (1 - sigmoid(z_i))`.
fn hessian_vec(
    v_w: &[f64],
    v_b: f64,
    x: &FeatureMatrix,
    curvature: &[f64],
    c: f64,
) -> (Vec<f64>, f64) {
    let mut out_w = v_w.to_vec();
    let mut out_b = 0.0;
    for (row, &s) in x.rows().iter().zip(curvature) {
        let mut proj = v_b;
        for &(col, value) in &row.entries {
            proj += v_w[col] * value;
        }
        let coeff = c * s * proj;
        for &(col, value) in &row.entries {
            out_w[col] += coeff * value;
        }
        out_b += coeff;
    }
    (out_w, out_b)
}

pub(crate) fn fit(x: &FeatureMatrix, y: &[Label], c: f64) -> LogregState {
    let dim = x.dim();
    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;

    for _ in 0..LOGREG_MAX_ITER {
        let (grad_w, grad_b) = gradient(&weights, bias, x, y, c);
        let grad_norm = (grad_w.iter().map(|g| g * g).sum::<f64>() + grad_b * grad_b).sqrt();
        if grad_norm <= LOGREG_GRAD_TOL {
            break;
        }

        let zs = margins(&weights, bias, x);
        let curvature: Vec<f64> = zs
            .iter()
            .map(|&z| {
                let s = sigmoid(z);
                s * (1.0 - s)
            })
            .collect();

        // CG on H p = -g with a Newton-CG forcing tolerance.
        let mut p_w = vec![0.0; dim];
        let mut p_b = 0.0;
        let mut r_w: Vec<f64> = grad_w.iter().map(|g| -g).collect();
        let mut r_b = -grad_b;
        let mut d_w = r_w.clone();
        let mut d_b = r_b;
        let mut rsq = r_w.iter().map(|r| r * r).sum::<f64>() + r_b * r_b;
        let cg_tol = (grad_norm.sqrt().min(0.5) * grad_norm).max(1e-12);
        let max_cg = (2 * (dim + 1)).clamp(10, 250);
        for _ in 0..max_cg {
            if rsq.sqrt() <= cg_tol {
                break;
            }
            let (hd_w, hd_b) = hessian_vec(&d_w, d_b, x, &curvature, c);
            let dhd = d_w.iter().zip(&hd_w).map(|(a, b)| a * b).sum::<f64>() + d_b * hd_b;
            if dhd <= 0.0 {
                // Non-positive curvature direction; fall back to what we have
                // (or the steepest descent direction on the first pass).
                if p_w.iter().all(|&v| v == 0.0) && p_b == 0.0 {
                    p_w = r_w.clone();
                    p_b = r_b;
                }
                break;
            }
            let alpha = rsq / dhd;
            for (p, d) in p_w.iter_mut().zip(&d_w) {
                *p += alpha * d;
            }
            p_b += alpha * d_b;
            for (r, hd) in r_w.iter_mut().zip(&hd_w) {
                *r -= alpha * hd;
            }
            r_b -= alpha * hd_b;
            let rsq_new = r_w.iter().map(|r| r * r).sum::<f64>() + r_b * r_b;
            let beta = rsq_new / rsq;
            for (d, r) in d_w.iter_mut().zip(&r_w) {
                *d = r + beta * *d;
            }
            d_b = r_b + beta * d_b;
            rsq = rsq_new;
        }

        // Backtracking line search (Armijo).
        let f0 = objective(&weights, bias, x, y, c);
        let slope = grad_w.iter().zip(&p_w).map(|(g, p)| g * p).sum::<f64>() + grad_b * p_b;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand_w: Vec<f64> = weights.iter().zip(&p_w).map(|(w, p)| w + step * p).collect();
            let cand_b = bias + step * p_b;
            if objective(&cand_w, cand_b, x, y, c) <= f0 + 1e-4 * step * slope {
                weights = cand_w;
                bias = cand_b;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    LogregState { weights, bias }
}

impl LogregState {
    pub(crate) fn score(&self, x: &FeatureVector) -> f64 {
        let mut z = self.bias;
        for &(col, value) in &x.entries {
            if col < self.weights.len() {
                z += self.weights[col] * value;
            }
        }
        sigmoid(z)
    }

    #[cfg(test)]
    pub(crate) fn new_for_tests(weights: Vec<f64>, bias: f64) -> Self {
        LogregState { weights, bias }
    }
}
