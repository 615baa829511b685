//! Growing the calibration tree with warm-started node models.

use crate::boost::{BoostState, Features, WeakKind};
use crate::data::Attribute;
use crate::error::{CalibraError, Result};
use crate::pct::{best_split, ScoreRecord, Split, SplitNode, TreeNode};

#[derive(Debug, Clone)]
pub struct GrowConfig {
    /// Boosting iterations added at every node (root-selected count).
    pub iterations_per_node: usize,
    /// Nodes with fewer records than this become leaves.
    pub min_leaf: usize,
    pub weak_kind: WeakKind,
}

/// Grows an unpruned calibration tree. The root boosts on all records; each
/// child inherits the parent's boosting state for its record subset and adds
/// the same number of iterations on that subset.
pub fn grow_tree(
    records: &[ScoreRecord],
    schema: &[Attribute],
    num_classes: usize,
    config: &GrowConfig,
) -> Result<TreeNode> {
    if records.is_empty() {
        return Err(CalibraError::InvalidData(
            "cannot grow a calibration tree on no records".into(),
        ));
    }
    let indices: Vec<usize> = (0..records.len()).collect();
    let state = BoostState::new(records.len(), num_classes);
    grow_node(records, schema, num_classes, config, indices, state)
}

fn grow_node(
    records: &[ScoreRecord],
    schema: &[Attribute],
    num_classes: usize,
    config: &GrowConfig,
    indices: Vec<usize>,
    mut state: BoostState,
) -> Result<TreeNode> {
    debug_assert_eq!(state.n_rows(), indices.len());
    let score_rows: Vec<Vec<f64>> = indices
        .iter()
        .map(|&i| records[i].scores.clone())
        .collect();
    let features = Features::from_rows(&score_rows)?;
    let labels: Vec<usize> = indices.iter().map(|&i| records[i].label).collect();
    let orders = match config.weak_kind {
        WeakKind::SimpleLinear => None,
        _ => Some(features.column_orders()),
    };

    let mut added = Vec::with_capacity(config.iterations_per_node);
    for _ in 0..config.iterations_per_node {
        added.push(state.step(&features, orders.as_deref(), &labels, config.weak_kind)?);
    }
    let train_sse = state.squared_error(&labels);

    let pure = labels.windows(2).all(|w| w[0] == w[1]);
    let split = if indices.len() < config.min_leaf || pure {
        None
    } else {
        best_split(records, &indices, schema, num_classes)
    };

    let Some(split) = split else {
        return Ok(TreeNode {
            added,
            split: None,
            n_records: indices.len(),
            train_sse,
        });
    };

    let num_children = match &split {
        Split::Numeric { .. } => 2,
        Split::Categorical { attr, .. } => schema[*attr]
            .num_values()
            .expect("categorical split on categorical attribute"),
    };
    // Partition positions (into this node's ordering) per child branch.
    let mut branch_positions: Vec<Vec<usize>> = vec![Vec::new(); num_children];
    for (pos, &i) in indices.iter().enumerate() {
        let b = split.route(&records[i].attrs, num_children);
        branch_positions[b].push(pos);
    }

    let mut children = Vec::with_capacity(num_children);
    for positions in &branch_positions {
        let child_indices: Vec<usize> = positions.iter().map(|&p| indices[p]).collect();
        let child_state = state.subset(positions);
        children.push(grow_node(
            records,
            schema,
            num_classes,
            config,
            child_indices,
            child_state,
        )?);
    }

    Ok(TreeNode {
        added,
        split: Some(SplitNode { split, children }),
        n_records: indices.len(),
        train_sse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::fit_additive_model;
    use crate::data::{Attribute, Cell};
    use crate::pct::CalibrationTree;

    fn config(iters: usize) -> GrowConfig {
        GrowConfig {
            iterations_per_node: iters,
            min_leaf: 15,
            weak_kind: WeakKind::SimpleLinear,
        }
    }

    fn binary_schema() -> Vec<Attribute> {
        vec![Attribute::categorical(
            "region",
            vec!["a".into(), "b".into()],
        )]
    }

    /// Region-dependent labels with one binary original attribute and a
    /// score column carrying its own (weaker) signal.
    fn region_records(n: usize) -> Vec<ScoreRecord> {
        (0..n)
            .map(|i| {
                let region = usize::from(i % 2 == 0);
                let label = region;
                ScoreRecord {
                    attrs: vec![Cell::Cat(region)],
                    scores: vec![if i % 5 == 0 { 0.5 } else { -0.1 }],
                    label,
                }
            })
            .collect()
    }

    #[test]
    fn fewer_than_fifteen_records_stay_single_node() {
        let records = region_records(14);
        let tree = grow_tree(&records, &binary_schema(), 2, &config(3)).unwrap();
        assert!(tree.is_leaf());
        // Output identical to the plain global LogitBoost model.
        let rows: Vec<Vec<f64>> = records.iter().map(|r| r.scores.clone()).collect();
        let feats = Features::from_rows(&rows).unwrap();
        let labels: Vec<usize> = records.iter().map(|r| r.label).collect();
        let global = fit_additive_model(&feats, &labels, 2, 3, WeakKind::SimpleLinear).unwrap();
        let wrapped = CalibrationTree {
            schema: binary_schema(),
            class_names: vec!["n".into(), "p".into()],
            score_dim: 1,
            score_kind: crate::calibrators::ScoreKind::Margin,
            iterations_per_node: 3,
            root: tree,
        };
        for r in &records {
            let a = wrapped.calibrate_transformed(&r.attrs, &r.scores).unwrap();
            let b = global.predict_probs(&r.scores);
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn pure_subset_becomes_leaf_regardless_of_size() {
        let records: Vec<ScoreRecord> = (0..40)
            .map(|i| ScoreRecord {
                attrs: vec![Cell::Cat(i % 2)],
                scores: vec![i as f64],
                label: 0,
            })
            .collect();
        let tree = grow_tree(&records, &binary_schema(), 2, &config(2)).unwrap();
        assert!(tree.is_leaf());
    }

    #[test]
    fn region_labels_grow_a_split() {
        let records = region_records(60);
        let tree = grow_tree(&records, &binary_schema(), 2, &config(4)).unwrap();
        assert!(!tree.is_leaf());
        assert_eq!(tree.num_leaves(), 2);
    }

    #[test]
    fn leaf_partition_covers_every_record_once() {
        let records = region_records(80);
        let tree = grow_tree(&records, &binary_schema(), 2, &config(2)).unwrap();
        let split = tree.split.as_ref().unwrap();
        let total: usize = split.children.iter().map(|c| c.n_records).sum();
        assert_eq!(total, tree.n_records);
    }

    #[test]
    fn warm_start_adds_iterations_per_level() {
        let records = region_records(60);
        let tree = grow_tree(&records, &binary_schema(), 2, &config(4)).unwrap();
        assert_eq!(tree.added.len(), 4);
        for child in &tree.split.as_ref().unwrap().children {
            assert_eq!(child.added.len(), 4);
        }
    }

    /// Constant scores with region-dependent labels: the tree must split on
    /// the original attributes and its training RMSE must beat any constant
    /// probability predictor.
    #[test]
    fn constant_scores_with_region_labels_beat_best_constant() {
        let records: Vec<ScoreRecord> = (0..100)
            .map(|i| ScoreRecord {
                attrs: vec![Cell::Cat(usize::from(i % 2 == 0))],
                scores: vec![0.0],
                label: usize::from(i % 2 == 0),
            })
            .collect();
        let tree_root = grow_tree(&records, &binary_schema(), 2, &config(8)).unwrap();
        assert!(!tree_root.is_leaf());
        let tree = CalibrationTree {
            schema: binary_schema(),
            class_names: vec!["n".into(), "p".into()],
            score_dim: 1,
            score_kind: crate::calibrators::ScoreKind::Margin,
            iterations_per_node: 8,
            root: tree_root,
        };
        let tree_rmse = tree.training_rmse(&records).unwrap();

        // Best constant predictor: the class base rates (0.5, 0.5) here,
        // giving RMSE 0.5 on one-hot targets.
        let best_constant_rmse = 0.5;
        assert!(
            tree_rmse < best_constant_rmse - 0.2,
            "tree {tree_rmse} vs constant {best_constant_rmse}"
        );
    }

    #[test]
    fn warm_start_consistency_child_state_extends_parent() {
        // A child's scores on its own records equal the parent scores plus
        // the child's added iterations, checked bit for bit.
        let records = region_records(60);
        let cfg = config(3);
        let tree = grow_tree(&records, &binary_schema(), 2, &cfg).unwrap();
        let split = tree.split.as_ref().unwrap();

        // Recompute the parent state by replaying the root's iterations.
        for (branch, child) in split.children.iter().enumerate() {
            let child_records: Vec<&ScoreRecord> = records
                .iter()
                .filter(|r| r.attrs[0] == Cell::Cat(branch))
                .collect();
            assert_eq!(child.n_records, child_records.len());
            for r in child_records {
                let mut f = vec![0.0; 2];
                for learners in tree.added.iter().chain(child.added.iter()) {
                    crate::boost::apply_iteration(learners, &r.scores, &mut f);
                }
                // Leaf evaluation through the tree must be identical.
                let wrapped = CalibrationTree {
                    schema: binary_schema(),
                    class_names: vec!["n".into(), "p".into()],
                    score_dim: 1,
                    score_kind: crate::calibrators::ScoreKind::Margin,
                    iterations_per_node: 3,
                    root: tree.clone(),
                };
                let p_tree = wrapped.calibrate_transformed(&r.attrs, &r.scores).unwrap();
                let p_direct = crate::boost::softmax_probs(&f);
                assert_eq!(p_tree, p_direct);
            }
        }
    }
}
