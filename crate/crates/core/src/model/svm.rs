//! Sigmoid-kernel SVM trained by sequential minimal optimization.
//!
//! Kernel: `K(x, z) = tanh(gamma * (x . z) + coef0)` with the "scale" gamma,
//! `1 / (dim * var)` where `var` is the variance of all feature-matrix values
//! (implicit zeros included). The sigmoid kernel is not positive definite;
//! the solver follows the conventional behavior and evaluates the objective
//! at the clip boundaries whenever the pairwise curvature is non-positive.
//! The per-pass scan and the second-index choice are deterministic, so a
//! fitted model is a pure function of its inputs.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};

use super::{sigmoid, SMO_MAX_PASSES, SMO_TOL};

const ALPHA_EPS: f64 = 1e-12;
/// Precompute the full kernel matrix up to this many samples.
const KERNEL_CACHE_LIMIT: usize = 3000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct SvmState {
    support: Vec<FeatureVector>,
    /// `alpha_i * y_i` per support vector.
    dual_coef: Vec<f64>,
    bias: f64,
    gamma: f64,
    coef0: f64,
}

fn signed(label: Label) -> f64 {
    match label {
        Label::Related => 1.0,
        Label::Unrelated => -1.0,
    }
}

/// The "scale" gamma: `1 / (dim * var(X))`, or 1 when the variance is zero.
fn scale_gamma(x: &FeatureMatrix) -> f64 {
    let cells = (x.len() * x.dim()) as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for row in x.rows() {
        for &(_, v) in &row.entries {
            sum += v;
            sum_sq += v * v;
        }
    }
    let mean = sum / cells;
    let var = sum_sq / cells - mean * mean;
    if var > 0.0 {
        1.0 / (x.dim() as f64 * var)
    } else {
        1.0
    }
}

struct Kernel<'a> {
    x: &'a FeatureMatrix,
    gamma: f64,
    coef0: f64,
    cache: Option<Vec<f64>>,
}

impl<'a> Kernel<'a> {
    fn new(x: &'a FeatureMatrix, gamma: f64, coef0: f64) -> Self {
        let n = x.len();
        let cache = (n <= KERNEL_CACHE_LIMIT).then(|| {
            let mut cache = vec![0.0; n * n];
            for i in 0..n {
                for j in i..n {
                    let k = (gamma * x.row(i).dot(x.row(j)) + coef0).tanh();
                    cache[i * n + j] = k;
                    cache[j * n + i] = k;
                }
            }
            cache
        });
        Kernel {
            x,
            gamma,
            coef0,
            cache,
        }
    }

    fn k(&self, i: usize, j: usize) -> f64 {
        match &self.cache {
            Some(cache) => cache[i * self.x.len() + j],
            None => (self.gamma * self.x.row(i).dot(self.x.row(j)) + self.coef0).tanh(),
        }
    }
}

struct Solver<'a> {
    kernel: Kernel<'a>,
    y: Vec<f64>,
    alphas: Vec<f64>,
    errors: Vec<f64>,
    b: f64,
    c: f64,
}

impl Solver<'_> {
    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alphas[i1], self.alphas[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let (low, high) = if s < 0.0 {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        } else {
            ((a2 + a1 - self.c).max(0.0), (a2 + a1).min(self.c))
        };
        if low >= high {
            return false;
        }
        let k11 = self.kernel.k(i1, i1);
        let k12 = self.kernel.k(i1, i2);
        let k22 = self.kernel.k(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(low, high)
        } else {
            // Indefinite kernel: evaluate the objective at both clip bounds.
            let f1 = y1 * (e1 + self.b) - a1 * k11 - s * a2 * k12;
            let f2 = y2 * (e2 + self.b) - s * a1 * k12 - a2 * k22;
            let l1 = a1 + s * (a2 - low);
            let h1 = a1 + s * (a2 - high);
            let obj_low = l1 * f1 + low * f2 + 0.5 * l1 * l1 * k11 + 0.5 * low * low * k22
                + s * low * l1 * k12;
            let obj_high = h1 * f1 + high * f2 + 0.5 * h1 * h1 * k11 + 0.5 * high * high * k22
                + s * high * h1 * k12;
            if obj_low < obj_high - ALPHA_EPS {
                low
            } else if obj_low > obj_high + ALPHA_EPS {
                high
            } else {
                a2
            }
        };
        if (a2_new - a2).abs() < ALPHA_EPS * (a2_new + a2 + ALPHA_EPS) {
            return false;
        }
        if a2_new < ALPHA_EPS {
            a2_new = 0.0;
        } else if a2_new > self.c - ALPHA_EPS {
            a2_new = self.c;
        }
        let a1_new = (a1 + s * (a2 - a2_new)).clamp(0.0, self.c);

        let b1 = e1 + y1 * (a1_new - a1) * k11 + y2 * (a2_new - a2) * k12 + self.b;
        let b2 = e2 + y1 * (a1_new - a1) * k12 + y2 * (a2_new - a2) * k22 + self.b;
        let interior1 = a1_new > 0.0 && a1_new < self.c;
        let interior2 = a2_new > 0.0 && a2_new < self.c;
        let b_new = if interior1 {
            b1
        } else if interior2 {
            b2
        } else {
            (b1 + b2) / 2.0
        };

        let (d1, d2, db) = (y1 * (a1_new - a1), y2 * (a2_new - a2), b_new - self.b);
        for i in 0..self.y.len() {
            self.errors[i] += d1 * self.kernel.k(i1, i) + d2 * self.kernel.k(i2, i) - db;
        }
        self.alphas[i1] = a1_new;
        self.alphas[i2] = a2_new;
        self.b = b_new;
        true
    }

    fn examine(&mut self, i2: usize) -> bool {
        let y2 = self.y[i2];
        let a2 = self.alphas[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        if !((r2 < -SMO_TOL && a2 < self.c) || (r2 > SMO_TOL && a2 > 0.0)) {
            return false;
        }
        let n = self.y.len();
        // Platt's second-choice heuristic, made deterministic: best |E1-E2|
        // over interior points (lowest index on ties), then interior points
        // in scan order, then everything in scan order.
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            if self.alphas[i] > 0.0 && self.alphas[i] < self.c {
                let gap = (self.errors[i] - e2).abs();
                if best.map_or(true, |(g, _)| gap > g) {
                    best = Some((gap, i));
                }
            }
        }
        if let Some((_, i1)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        for offset in 0..n {
            let i1 = (i2 + 1 + offset) % n;
            if self.alphas[i1] > 0.0 && self.alphas[i1] < self.c && self.take_step(i1, i2) {
                return true;
            }
        }
        for offset in 0..n {
            let i1 = (i2 + 1 + offset) % n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    /// libsvm-style KKT gap: `max_{i in I_up} -y_i g_i - min_{i in I_low} -y_i g_i`.
    fn kkt_gap(&self) -> f64 {
        let n = self.y.len();
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for i in 0..n {
            // -y_i * grad_i of the dual objective; via the error cache this
            // is -(E_i + b) since E_i = sum_j a_j y_j K_ij - b - y_i.
            let v = -(self.errors[i] + self.b);
            let in_up = (self.y[i] > 0.0 && self.alphas[i] < self.c)
                || (self.y[i] < 0.0 && self.alphas[i] > 0.0);
            let in_low = (self.y[i] > 0.0 && self.alphas[i] > 0.0)
                || (self.y[i] < 0.0 && self.alphas[i] < self.c);
            if in_up && v > m_up {
                m_up = v;
            }
            if in_low && v < m_low {
                m_low = v;
            }
        }
        m_up - m_low
    }
}

pub(crate) fn fit(x: &FeatureMatrix, y_labels: &[Label], c: f64, coef0: f64) -> Result<SvmState> {
    fit_capped(x, y_labels, c, coef0, SMO_MAX_PASSES)
}

pub(crate) fn fit_capped(
    x: &FeatureMatrix,
    y_labels: &[Label],
    c: f64,
    coef0: f64,
    max_passes: u32,
) -> Result<SvmState> {
    let gamma = scale_gamma(x);
    let y: Vec<f64> = y_labels.iter().map(|&l| signed(l)).collect();
    let n = y.len();
    let mut solver = Solver {
        kernel: Kernel::new(x, gamma, coef0),
        errors: y.iter().map(|&yi| -yi).collect(),
        y,
        alphas: vec![0.0; n],
        b: 0.0,
        c,
    };

    let mut examine_all = true;
    let mut passes = 0u32;
    loop {
        let full_sweep = examine_all;
        let mut changed = 0usize;
        for i in 0..n {
            let interior = solver.alphas[i] > 0.0 && solver.alphas[i] < solver.c;
            if (full_sweep || interior) && solver.examine(i) {
                changed += 1;
            }
        }
        passes += 1;
        if full_sweep && changed == 0 {
            // A clean pass over every sample: KKT holds within tolerance.
            break;
        }
        if full_sweep {
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
        if passes >= max_passes {
            return Err(Error::SmoConvergence {
                passes,
                gap: solver.kkt_gap(),
            });
        }
    }

    let mut support = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        if solver.alphas[i] > ALPHA_EPS {
            support.push(x.row(i).clone());
            dual_coef.push(solver.alphas[i] * solver.y[i]);
        }
    }
    Ok(SvmState {
        support,
        dual_coef,
        bias: -solver.b,
        gamma,
        coef0,
    })
}

impl SvmState {
    fn decision(&self, x: &FeatureVector) -> f64 {
        let mut acc = self.bias;
        for (sv, coef) in self.support.iter().zip(&self.dual_coef) {
            acc += coef * (self.gamma * sv.dot(x) + self.coef0).tanh();
        }
        acc
    }

    /// Logistic squashing of the decision value.
    pub(crate) fn score(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.decision(x))
    }

    pub(crate) fn dual_coef(&self) -> &[f64] {
        &self.dual_coef
    }

    pub(crate) fn bias(&self) -> f64 {
        self.bias
    }
}
