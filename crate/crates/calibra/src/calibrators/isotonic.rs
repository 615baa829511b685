//! Isotonic regression via the pair-adjacent violators algorithm.

use serde::{Deserialize, Serialize};

use crate::error::{CalibraError, Result};

/// Piecewise-constant non-decreasing calibration function. `breakpoints[i]`
/// is the left edge of segment i (left-closed); scores below the first
/// breakpoint take the first value, scores at or above the last take the
/// last value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicModel {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl IsotonicModel {
    pub fn apply(&self, score: f64) -> f64 {
        apply_isotonic(self, score)
    }
}

/// Fits the monotone non-decreasing weighted least-squares function.
/// Exact score ties are pooled into one weighted point first, so the fitted
/// function is well defined.
pub fn pav_fit(pairs: &[(f64, f64, f64)]) -> Result<IsotonicModel> {
    if pairs.is_empty() {
        return Err(CalibraError::InvalidData(
            "isotonic regression needs at least one pair".into(),
        ));
    }
    if pairs
        .iter()
        .any(|&(s, t, w)| !s.is_finite() || !t.is_finite() || !(w > 0.0))
    {
        return Err(CalibraError::InvalidData(
            "isotonic pairs must be finite with positive weights".into(),
        ));
    }
    let mut sorted: Vec<(f64, f64, f64)> = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));

    // Pool exact ties by weighted mean.
    let mut pooled: Vec<(f64, f64, f64)> = Vec::with_capacity(sorted.len());
    for (s, t, w) in sorted {
        match pooled.last_mut() {
            Some(last) if last.0 == s => {
                let total = last.2 + w;
                last.1 = (last.1 * last.2 + t * w) / total;
                last.2 = total;
            }
            _ => pooled.push((s, t, w)),
        }
    }

    // PAV over the pooled points: blocks of (value, weight, count).
    let mut values: Vec<f64> = Vec::with_capacity(pooled.len());
    let mut weights: Vec<f64> = Vec::with_capacity(pooled.len());
    let mut counts: Vec<usize> = Vec::with_capacity(pooled.len());
    for &(_, t, w) in &pooled {
        values.push(t);
        weights.push(w);
        counts.push(1);
        while values.len() > 1 {
            let k = values.len() - 1;
            if values[k - 1] > values[k] {
                let total = weights[k - 1] + weights[k];
                values[k - 1] = (values[k - 1] * weights[k - 1] + values[k] * weights[k]) / total;
                weights[k - 1] = total;
                counts[k - 1] += counts[k];
                values.pop();
                weights.pop();
                counts.pop();
            } else {
                break;
            }
        }
    }

    // Emit one breakpoint per block, at the block's first pooled score.
    let mut breakpoints = Vec::with_capacity(values.len());
    let mut pos = 0usize;
    for &c in &counts {
        breakpoints.push(pooled[pos].0);
        pos += c;
    }
    Ok(IsotonicModel {
        breakpoints,
        values,
    })
}

/// Value of the segment containing the score (left-closed segments).
pub fn apply_isotonic(model: &IsotonicModel, score: f64) -> f64 {
    match model
        .breakpoints
        .binary_search_by(|b| b.partial_cmp(&score).expect("finite breakpoints"))
    {
        Ok(i) => model.values[i],
        Err(0) => model.values[0],
        Err(i) => model.values[i - 1],
    }
}
