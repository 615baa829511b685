//! Cross-validated selection of the LogitBoost iteration count.

use crate::boost::{apply_iteration, softmax_probs, BoostState, Features, WeakKind};
use crate::data::stratified_assignment;
use crate::error::{CalibraError, Result};

/// Runs stratified k-fold cross-validation, boosting up to `max_iter` on each
/// fold in a single pass, and returns the iteration count with the smallest
/// mean held-out RMSE (ties go to the smallest count).
pub fn select_iterations_cv(
    features: &Features,
    labels: &[usize],
    num_classes: usize,
    max_iter: usize,
    folds: usize,
    seed: u64,
    kind: WeakKind,
) -> Result<usize> {
    if max_iter < 1 {
        return Err(CalibraError::InvalidArgument(
            "max_iter must be at least 1".into(),
        ));
    }
    if features.n_rows() < folds {
        return Err(CalibraError::InvalidArgument(format!(
            "dataset of {} rows is smaller than the fold count {folds}",
            features.n_rows()
        )));
    }
    let assignment = stratified_assignment(labels, folds, seed)?;

    // One boosting pass per fold; held-out scores are updated incrementally
    // with each iteration's learners.
    let mut mean_rmse = vec![0.0f64; max_iter];
    for fold in 0..folds {
        let train_idx = assignment.train_indices(fold);
        let test_idx = assignment.test_indices(fold);
        if train_idx.is_empty() || test_idx.is_empty() {
            continue;
        }
        let train_rows: Vec<Vec<f64>> = train_idx
            .iter()
            .map(|&i| features.row(i).to_vec())
            .collect();
        let train_feats = Features::from_rows(&train_rows)?;
        let train_labels: Vec<usize> = train_idx.iter().map(|&i| labels[i]).collect();
        let orders = match kind {
            WeakKind::SimpleLinear => None,
            _ => Some(train_feats.column_orders()),
        };

        let mut state = BoostState::new(train_feats.n_rows(), num_classes);
        let mut test_f = vec![vec![0.0f64; num_classes]; test_idx.len()];
        for it in 0..max_iter {
            let learners = state.step(&train_feats, orders.as_deref(), &train_labels, kind)?;
            let mut sse = 0.0;
            for (t, &i) in test_idx.iter().enumerate() {
                apply_iteration(&learners, features.row(i), &mut test_f[t]);
                let p = softmax_probs(&test_f[t]);
                for (j, &pj) in p.iter().enumerate() {
                    let y = if labels[i] == j { 1.0 } else { 0.0 };
                    sse += (pj - y) * (pj - y);
                }
            }
            let rmse = (sse / (test_idx.len() * num_classes) as f64).sqrt();
            mean_rmse[it] += rmse / folds as f64;
        }
    }

    let mut best = 0usize;
    for it in 1..max_iter {
        if mean_rmse[it] < mean_rmse[best] {
            best = it;
        }
    }
    Ok(best + 1)
}
