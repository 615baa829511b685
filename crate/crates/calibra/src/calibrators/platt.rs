//! Platt scaling: a sigmoid over a linear function of the scores, fitted by
//! damped Newton iteration against softened targets.
//!
//! The model stores the positive-class score function F(s) = w·s + b under
//! the sum-to-zero convention (the negative class carries -F), so the
//! positive-class probability is softmax over (F, -F), i.e. sigmoid(2F).

use serde::{Deserialize, Serialize};

use crate::error::{CalibraError, Result};

pub const DEFAULT_MAX_NEWTON: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Sigmoid calibration model over a score vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl PlattModel {
    /// Positive-class score F(s) = w·s + b.
    pub fn score(&self, scores: &[f64]) -> f64 {
        debug_assert_eq!(scores.len(), self.weights.len());
        self.weights
            .iter()
            .zip(scores)
            .map(|(w, s)| w * s)
            .sum::<f64>()
            + self.bias
    }

    /// Positive-class probability under the sum-to-zero convention.
    pub fn apply(&self, scores: &[f64]) -> f64 {
        stable_sigmoid(2.0 * self.score(scores))
    }
}

/// Applies a fitted model; the binary output is (1 - p, p) ordered by class.
pub fn apply_platt(model: &PlattModel, scores: &[f64]) -> f64 {
    model.apply(scores)
}

fn stable_sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Softened regression targets: positives map to (N+ + 1)/(N+ + 2) and
/// negatives to 1/(N- + 2), keeping targets interior to (0, 1) so the fit
/// stays finite even on separable data.
pub fn platt_targets(labels: &[bool]) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(CalibraError::InvalidData(
            "platt targets need at least one label".into(),
        ));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let t_pos = (n_pos + 1.0) / (n_pos + 2.0);
    let t_neg = 1.0 / (n_neg + 2.0);
    Ok(labels
        .iter()
        .map(|&l| if l { t_pos } else { t_neg })
        .collect())
}

/// Cross-entropy of sigmoid(2(w·s + b)) against soft targets, and its
/// analytic gradient over (weights..., bias).
pub fn platt_loss_and_gradient(
    weights: &[f64],
    bias: f64,
    scores: &[Vec<f64>],
    targets: &[f64],
) -> (f64, Vec<f64>) {
    let d = weights.len();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (s, &t) in scores.iter().zip(targets) {
        let u: f64 = weights.iter().zip(s).map(|(w, x)| w * x).sum::<f64>() + bias;
        let p = stable_sigmoid(2.0 * u).clamp(1e-15, 1.0 - 1e-15);
        loss -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        let g = 2.0 * (p - t);
        for (k, &x) in s.iter().enumerate() {
            grad[k] += g * x;
        }
        grad[d] += g;
    }
    (loss, grad)
}

/// Solves a small symmetric system by Gaussian elimination with partial
/// pivoting. Dimensions here are tiny (score dimension + 1).
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut v = b[col];
        for c in col + 1..n {
            v -= a[col][c] * x[c];
        }
        x[col] = v / a[col][col];
    }
    Some(x)
}

/// Fits Platt scaling by damped Newton iteration, minimizing cross-entropy
/// against the softened targets. Converged when the gradient max-norm drops
/// below `tol` or `max_newton` steps have run.
pub fn fit_platt(
    scores: &[Vec<f64>],
    labels: &[bool],
    max_newton: usize,
    tol: f64,
) -> Result<PlattModel> {
    if scores.len() < 2 {
        return Err(CalibraError::InvalidData(
            "platt scaling needs at least two instances".into(),
        ));
    }
    if scores.len() != labels.len() {
        return Err(CalibraError::InvalidData(
            "scores and labels must have the same length".into(),
        ));
    }
    let d = scores[0].len();
    if scores.iter().any(|s| s.len() != d) {
        return Err(CalibraError::InvalidData("ragged score rows".into()));
    }
    let targets = platt_targets(labels)?;

    // Every score vector identical: the slope is unidentifiable. Decision:
    // zero weights, bias chosen so the output equals the mean target.
    let all_equal = scores.iter().all(|s| s == &scores[0]);
    if all_equal {
        let mean_t: f64 = targets.iter().sum::<f64>() / targets.len() as f64;
        let mean_t = mean_t.clamp(1e-15, 1.0 - 1e-15);
        return Ok(PlattModel {
            weights: vec![0.0; d],
            bias: 0.5 * (mean_t / (1.0 - mean_t)).ln(),
        });
    }

    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let (mut loss, mut grad) = platt_loss_and_gradient(&weights, bias, scores, &targets);
    for _ in 0..max_newton {
        if grad.iter().all(|g| g.abs() < tol) {
            break;
        }
        // Hessian of the loss over (w, b).
        let mut h = vec![vec![0.0; d + 1]; d + 1];
        for s in scores.iter() {
            let u: f64 = weights.iter().zip(s).map(|(w, x)| w * x).sum::<f64>() + bias;
            let p = stable_sigmoid(2.0 * u).clamp(1e-15, 1.0 - 1e-15);
            let c = 4.0 * p * (1.0 - p);
            for k in 0..=d {
                let xk = if k == d { 1.0 } else { s[k] };
                for l in 0..=d {
                    let xl = if l == d { 1.0 } else { s[l] };
                    h[k][l] += c * xk * xl;
                }
            }
        }
        // Small ridge keeps collinear score dimensions solvable.
        let ridge = 1e-10 * (1.0 + h.iter().enumerate().map(|(i, r)| r[i]).sum::<f64>());
        for (i, row) in h.iter_mut().enumerate() {
            row[i] += ridge;
        }
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let Some(delta) = solve_dense(h, rhs) else {
            break;
        };

        // Backtracking damping: halve the step until the loss improves.
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let trial_w: Vec<f64> = weights
                .iter()
                .zip(&delta[..d])
                .map(|(w, dlt)| w + step * dlt)
                .collect();
            let trial_b = bias + step * delta[d];
            let (trial_loss, trial_grad) =
                platt_loss_and_gradient(&trial_w, trial_b, scores, &targets);
            if !trial_loss.is_finite() {
                return Err(CalibraError::Numeric(
                    "non-finite loss during platt optimization".into(),
                ));
            }
            if trial_loss <= loss {
                weights = trial_w;
                bias = trial_b;
                loss = trial_loss;
                grad = trial_grad;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(CalibraError::Numeric(
            "non-finite coefficients after platt optimization".into(),
        ));
    }
    Ok(PlattModel { weights, bias })
}
