//! Cost-complexity pruning on RMSE with cross-validated subtree selection.
//!
//! The weakest-link sequence uses the per-instance normalized squared error
//! (the square of the reported RMSE) as the additive error measure and leaf
//! count as complexity. Candidate alphas are evaluated by regrowing and
//! pruning per fold, CART style; the alpha with the lowest cross-validated
//! RMSE wins, with ties resolved toward more pruning.

use serde::{Deserialize, Serialize};

use crate::data::stratified_assignment;
use crate::error::Result;
use crate::pct::grow::{grow_tree, GrowConfig};
use crate::pct::{CalibrationTree, ScoreRecord, TreeNode};

const TIE_EPS: f64 = 1e-12;

/// Outcome of the pruning search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PruningRecord {
    /// Weakest-link alpha per candidate subtree, strictly increasing,
    /// starting at 0 (full tree) and ending at the root-only tree.
    pub alphas: Vec<f64>,
    /// Cross-validated RMSE estimate per candidate.
    pub cv_rmse: Vec<f64>,
    /// Leaf count of each candidate on the main tree.
    pub leaves: Vec<usize>,
    /// Index of the selected candidate.
    pub chosen: usize,
}

/// Bottom-up statistics for one pass: subtree error contribution and leaf
/// count, plus the smallest g-value found below.
struct SubtreeStats {
    r_subtree: f64,
    leaves: usize,
    min_g: f64,
}

fn subtree_stats(node: &TreeNode, norm: f64) -> SubtreeStats {
    match &node.split {
        None => SubtreeStats {
            r_subtree: node.train_sse / norm,
            leaves: 1,
            min_g: f64::INFINITY,
        },
        Some(s) => {
            let mut r = 0.0;
            let mut leaves = 0;
            let mut min_g = f64::INFINITY;
            for child in &s.children {
                let st = subtree_stats(child, norm);
                r += st.r_subtree;
                leaves += st.leaves;
                min_g = min_g.min(st.min_g);
            }
            let r_as_leaf = node.train_sse / norm;
            let g = (r_as_leaf - r) / (leaves as f64 - 1.0);
            SubtreeStats {
                r_subtree: r,
                leaves,
                min_g: min_g.min(g),
            }
        }
    }
}

/// Smallest optimal subtree at complexity parameter `alpha`: every internal
/// node whose split is not worth its extra leaves collapses to a leaf.
fn prune_at(node: &TreeNode, alpha: f64, norm: f64) -> (TreeNode, f64, usize) {
    match &node.split {
        None => (node.clone(), node.train_sse / norm, 1),
        Some(s) => {
            let mut children = Vec::with_capacity(s.children.len());
            let mut r_subtree = 0.0;
            let mut leaves = 0;
            for child in &s.children {
                let (c, r, l) = prune_at(child, alpha, norm);
                children.push(c);
                r_subtree += r;
                leaves += l;
            }
            let r_as_leaf = node.train_sse / norm;
            if r_as_leaf - r_subtree <= alpha * (leaves as f64 - 1.0) + TIE_EPS {
                (
                    TreeNode {
                        added: node.added.clone(),
                        split: None,
                        n_records: node.n_records,
                        train_sse: node.train_sse,
                    },
                    r_as_leaf,
                    1,
                )
            } else {
                (
                    TreeNode {
                        added: node.added.clone(),
                        split: Some(crate::pct::SplitNode {
                            split: s.split.clone(),
                            children,
                        }),
                        n_records: node.n_records,
                        train_sse: node.train_sse,
                    },
                    r_subtree,
                    leaves,
                )
            }
        }
    }
}

/// Weakest-link alpha sequence for a grown tree, starting at 0 (full tree)
/// and ending with the root-only tree. Strictly increasing.
fn alpha_sequence(root: &TreeNode, norm: f64) -> Vec<f64> {
    let mut alphas = vec![0.0];
    let mut current = root.clone();
    while current.split.is_some() {
        let stats = subtree_stats(&current, norm);
        let g = stats.min_g.max(*alphas.last().expect("non-empty"));
        let (pruned, _, _) = prune_at(&current, g, norm);
        if *alphas.last().unwrap() < g {
            alphas.push(g);
        }
        // A repeated alpha replaces the previous candidate implicitly: the
        // final prune at that alpha already collapses everything eligible.
        current = pruned;
    }
    alphas
}

fn holdout_sse(
    root: &TreeNode,
    records: &[ScoreRecord],
    indices: &[usize],
    num_classes: usize,
) -> f64 {
    let mut sse = 0.0;
    for &i in indices {
        let r = &records[i];
        let mut f = vec![0.0; num_classes];
        let mut node = root;
        loop {
            for learners in &node.added {
                crate::boost::apply_iteration(learners, &r.scores, &mut f);
            }
            match &node.split {
                None => break,
                Some(s) => node = &s.children[s.split.route(&r.attrs, s.children.len())],
            }
        }
        let p = crate::boost::softmax_probs(&f);
        for (j, &pj) in p.iter().enumerate() {
            let y = if r.label == j { 1.0 } else { 0.0 };
            sse += (pj - y) * (pj - y);
        }
    }
    sse
}

/// Prunes a grown tree. Candidates always include the full tree (alpha 0)
/// and the root-only tree; each candidate's RMSE is estimated by k-fold
/// cross-validation with per-fold regrowing and pruning at the geometric
/// midpoint of its alpha interval.
pub fn prune_tree(
    tree: CalibrationTree,
    records: &[ScoreRecord],
    folds: usize,
    seed: u64,
    grow_cfg: &GrowConfig,
) -> Result<(CalibrationTree, PruningRecord)> {
    let num_classes = tree.num_classes();
    let n = records.len();
    let norm = (n * num_classes) as f64;
    let alphas = alpha_sequence(&tree.root, norm);
    let k_candidates = alphas.len();

    let leaves: Vec<usize> = alphas
        .iter()
        .map(|&a| prune_at(&tree.root, a, norm).2)
        .collect();

    let labels: Vec<usize> = records.iter().map(|r| r.label).collect();
    let folds = folds.min(n);
    let mut cv_sse = vec![0.0f64; k_candidates];
    if folds >= 2 && k_candidates > 1 {
        let assignment = stratified_assignment(&labels, folds, seed)?;
        for fold in 0..folds {
            let train_idx = assignment.train_indices(fold);
            let test_idx = assignment.test_indices(fold);
            if train_idx.is_empty() || test_idx.is_empty() {
                continue;
            }
            let train_records: Vec<ScoreRecord> =
                train_idx.iter().map(|&i| records[i].clone()).collect();
            let fold_root = grow_tree(&train_records, &tree.schema, num_classes, grow_cfg)?;
            let fold_norm = (train_records.len() * num_classes) as f64;
            for k in 0..k_candidates {
                let test_alpha = if k + 1 < k_candidates {
                    (alphas[k] * alphas[k + 1]).sqrt()
                } else {
                    f64::INFINITY
                };
                let (pruned, _, _) = prune_at(&fold_root, test_alpha, fold_norm);
                cv_sse[k] += holdout_sse(&pruned, records, &test_idx, num_classes);
            }
        }
    } else {
        // Too little data to cross-validate: score candidates by training
        // error so the record stays well-formed.
        for (k, &a) in alphas.iter().enumerate() {
            let (pruned, _, _) = prune_at(&tree.root, a, norm);
            let all: Vec<usize> = (0..n).collect();
            cv_sse[k] = holdout_sse(&pruned, records, &all, num_classes);
        }
    }
    let cv_rmse: Vec<f64> = cv_sse.iter().map(|&s| (s / norm).sqrt()).collect();

    // Minimal CV RMSE; ties resolve toward the larger alpha (more pruning).
    let best_value = cv_rmse.iter().copied().fold(f64::INFINITY, f64::min);
    let chosen = (0..k_candidates)
        .rev()
        .find(|&k| cv_rmse[k] <= best_value + TIE_EPS)
        .unwrap_or(0);

    let (pruned_root, _, _) = prune_at(&tree.root, alphas[chosen], norm);
    let record = PruningRecord {
        alphas,
        cv_rmse,
        leaves,
        chosen,
    };
    let pruned_tree = CalibrationTree {
        root: pruned_root,
        ..tree
    };
    Ok((pruned_tree, record))
}
