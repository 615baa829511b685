//! Probability-quality metrics: RMSE (root of the Brier score divided by
//! class count), equal-frequency reliability bins, and expected-cost
//! decisions.

use serde::{Deserialize, Serialize};

use crate::error::{CalibraError, Result};

/// RMSE of a probability matrix against one-hot labels:
/// sqrt( (1/(n*m)) * sum_ij (p_ij - y_ij)^2 ).
pub fn rmse(probs: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if probs.is_empty() {
        return Err(CalibraError::InvalidData(
            "rmse needs at least one instance".into(),
        ));
    }
    if probs.len() != labels.len() {
        return Err(CalibraError::InvalidData(
            "probability rows and labels must align".into(),
        ));
    }
    let m = probs[0].len();
    let mut sse = 0.0;
    for (row, &label) in probs.iter().zip(labels) {
        if row.len() != m {
            return Err(CalibraError::InvalidData("ragged probability rows".into()));
        }
        for (j, &p) in row.iter().enumerate() {
            let y = if j == label { 1.0 } else { 0.0 };
            sse += (p - y) * (p - y);
        }
    }
    Ok((sse / (probs.len() * m) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub mean_pred: f64,
    pub empirical: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBins {
    pub bins: Vec<ReliabilityBin>,
}

impl ReliabilityBins {
    /// Mean absolute deviation between bin mean prediction and empirical
    /// rate, weighted by bin count.
    pub fn mean_abs_deviation(&self) -> f64 {
        let total: usize = self.bins.iter().map(|b| b.count).sum();
        if total == 0 {
            return 0.0;
        }
        self.bins
            .iter()
            .map(|b| (b.mean_pred - b.empirical).abs() * b.count as f64)
            .sum::<f64>()
            / total as f64
    }
}

/// Equal-frequency reliability bins over positive-class probabilities.
/// Instances with identical predictions never straddle a bin boundary; ties
/// merge into the earlier bin, so the result may have fewer than `max_bins`
/// bins.
pub fn reliability_bins(
    probs: &[f64],
    labels: &[bool],
    max_bins: usize,
) -> Result<ReliabilityBins> {
    if max_bins == 0 {
        return Err(CalibraError::InvalidArgument(
            "max_bins must be at least 1".into(),
        ));
    }
    if probs.len() != labels.len() {
        return Err(CalibraError::InvalidData(
            "predictions and labels must align".into(),
        ));
    }
    let n = probs.len();
    if n == 0 {
        return Ok(ReliabilityBins { bins: Vec::new() });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        probs[a]
            .partial_cmp(&probs[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut bins = Vec::new();
    let mut start = 0usize;
    for b in 0..max_bins {
        let mut end = ((b + 1) * n) / max_bins;
        if b + 1 == max_bins {
            end = n;
        }
        // Ties never straddle: extend into the later bin's share.
        while end > 0 && end < n && probs[order[end]] == probs[order[end - 1]] {
            end += 1;
        }
        if end <= start {
            continue;
        }
        let count = end - start;
        let mean_pred = order[start..end]
            .iter()
            .map(|&i| probs[i])
            .sum::<f64>()
            / count as f64;
        let positives = order[start..end].iter().filter(|&&i| labels[i]).count();
        bins.push(ReliabilityBin {
            mean_pred,
            empirical: positives as f64 / count as f64,
            count,
        });
        start = end;
        if start >= n {
            break;
        }
    }
    Ok(ReliabilityBins { bins })
}

/// Class with the lowest expected misclassification cost: argmin_i of
/// sum_j C(i|j) * p_j, ties to the lowest index.
pub fn expected_cost_decision(probs: &[f64], costs: &[Vec<f64>]) -> Result<usize> {
    let m = probs.len();
    if costs.len() != m || costs.iter().any(|r| r.len() != m) {
        return Err(CalibraError::InvalidData(
            "cost matrix must be m x m for m class probabilities".into(),
        ));
    }
    let mut best = 0usize;
    let mut best_cost = f64::INFINITY;
    for (i, row) in costs.iter().enumerate() {
        let cost: f64 = row.iter().zip(probs).map(|(c, p)| c * p).sum();
        if cost < best_cost {
            best_cost = cost;
            best = i;
        }
    }
    Ok(best)
}
