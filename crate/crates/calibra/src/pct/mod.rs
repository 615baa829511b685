//! Probability calibration trees.
//!
//! The tree structure is grown over the original attributes with C4.5-style
//! gain-ratio splits, while every node carries an additive logistic model
//! over the base classifier's output scores. Children warm-start from the
//! parent's model and continue boosting on their own record subset. After
//! growing, cost-complexity pruning selects the subtree with the best
//! cross-validated RMSE. Inference routes an instance to a leaf by its
//! original attributes and applies that leaf's model to its scores.

mod grow;
mod prune;
mod split;

pub use grow::{grow_tree, GrowConfig};
pub use prune::{prune_tree, PruningRecord};
pub use split::best_split;

use serde::{Deserialize, Serialize};

use crate::boost::{
    apply_iteration, softmax_probs, AdditiveLogisticModel, Features, WeakKind, WeakLearner,
};
use crate::calibrators::ScoreKind;
use crate::data::{Attribute, Cell, Dataset};
use crate::error::{CalibraError, Result};

/// One calibration-training instance: original attribute vector, output
/// score vector from the base model, and the true label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub attrs: Vec<Cell>,
    pub scores: Vec<f64>,
    pub label: usize,
}

/// A split over one original attribute. `majority_branch` is the child that
/// received the most training records; instances whose attribute value
/// cannot be routed (unseen categorical values) follow it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Split {
    Numeric {
        attr: usize,
        threshold: f64,
        majority_branch: usize,
    },
    Categorical {
        attr: usize,
        majority_branch: usize,
    },
}

impl Split {
    pub fn attr(&self) -> usize {
        match self {
            Split::Numeric { attr, .. } | Split::Categorical { attr, .. } => *attr,
        }
    }

    fn majority(&self) -> usize {
        match self {
            Split::Numeric {
                majority_branch, ..
            }
            | Split::Categorical {
                majority_branch, ..
            } => *majority_branch,
        }
    }

    /// Child index for an attribute vector, falling back to the majority
    /// branch when the value cannot be routed.
    pub fn route(&self, attrs: &[Cell], num_children: usize) -> usize {
        let idx = match self {
            Split::Numeric { attr, threshold, .. } => match attrs.get(*attr) {
                Some(Cell::Num(v)) => {
                    if *v <= *threshold {
                        0
                    } else {
                        1
                    }
                }
                _ => self.majority(),
            },
            Split::Categorical { attr, .. } => match attrs.get(*attr) {
                Some(Cell::Cat(i)) if *i < num_children => *i,
                _ => self.majority(),
            },
        };
        idx.min(num_children - 1)
    }
}

/// One node of a calibration tree. `added` holds the boosting iterations
/// fitted at this node on top of everything inherited from its ancestors;
/// the node's full model is the concatenation along the root path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub added: Vec<Vec<WeakLearner>>,
    pub split: Option<SplitNode>,
    pub n_records: usize,
    /// Squared error of this node's model on its own training records.
    pub train_sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    pub split: Split,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    pub fn num_leaves(&self) -> usize {
        match &self.split {
            None => 1,
            Some(s) => s.children.iter().map(TreeNode::num_leaves).sum(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        1 + self.split.as_ref().map_or(0, |s| {
            s.children.iter().map(TreeNode::num_nodes).sum::<usize>()
        })
    }

    pub fn depth(&self) -> usize {
        match &self.split {
            None => 0,
            Some(s) => 1 + s.children.iter().map(TreeNode::depth).max().unwrap_or(0),
        }
    }
}

/// A fitted probability calibration tree together with everything needed to
/// route and score new instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTree {
    pub schema: Vec<Attribute>,
    pub class_names: Vec<String>,
    pub score_dim: usize,
    pub score_kind: ScoreKind,
    /// Boosting iterations added per node (selected once at the root).
    pub iterations_per_node: usize,
    pub root: TreeNode,
}

impl CalibrationTree {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Routes by original attributes to a leaf and evaluates that leaf's
    /// logistic model on the (already transformed) score vector. Internal
    /// node models only contribute through the warm-started path.
    pub fn calibrate_transformed(&self, attrs: &[Cell], scores: &[f64]) -> Result<Vec<f64>> {
        if scores.len() != self.score_dim {
            return Err(CalibraError::InvalidData(format!(
                "expected {} scores, got {}",
                self.score_dim,
                scores.len()
            )));
        }
        if attrs.len() != self.schema.len() {
            return Err(CalibraError::InvalidData(format!(
                "expected {} attributes, got {}",
                self.schema.len(),
                attrs.len()
            )));
        }
        let mut f = vec![0.0; self.num_classes()];
        let mut node = &self.root;
        loop {
            for learners in &node.added {
                apply_iteration(learners, scores, &mut f);
            }
            match &node.split {
                None => break,
                Some(s) => {
                    node = &s.children[s.split.route(attrs, s.children.len())];
                }
            }
        }
        Ok(softmax_probs(&f))
    }

    /// Calibrates raw base-model outputs, applying the tree's score
    /// transform (log-odds for probability scores) first.
    pub fn calibrate(&self, attrs: &[Cell], raw_scores: &[f64]) -> Result<Vec<f64>> {
        let transformed = crate::calibrators::assemble_score_vector(raw_scores, self.score_kind)?;
        self.calibrate_transformed(attrs, &transformed)
    }

    /// The root node's model as a standalone additive logistic model (the
    /// global LogitBoost fit all nodes warm-start from).
    pub fn root_model(&self) -> AdditiveLogisticModel {
        AdditiveLogisticModel {
            num_classes: self.num_classes(),
            iterations: self.root.added.clone(),
            iterations_used: self.root.added.len(),
        }
    }

    /// Training RMSE of the tree over a record set.
    pub fn training_rmse(&self, records: &[ScoreRecord]) -> Result<f64> {
        if records.is_empty() {
            return Err(CalibraError::InvalidData("no records".into()));
        }
        let m = self.num_classes();
        let mut sse = 0.0;
        for r in records {
            let p = self.calibrate_transformed(&r.attrs, &r.scores)?;
            for (j, &pj) in p.iter().enumerate() {
                let y = if r.label == j { 1.0 } else { 0.0 };
                sse += (pj - y) * (pj - y);
            }
        }
        Ok((sse / (records.len() * m) as f64).sqrt())
    }
}

/// Configuration for fitting a probability calibration tree.
#[derive(Debug, Clone)]
pub struct PctConfig {
    /// Upper bound for the cross-validated iteration search at the root.
    pub max_boost_iter: usize,
    /// Folds for the iteration search.
    pub iter_folds: usize,
    /// Folds for cost-complexity pruning.
    pub prune_folds: usize,
    /// Nodes with fewer records become leaves.
    pub min_leaf: usize,
    pub weak_kind: WeakKind,
    pub seed: u64,
}

impl Default for PctConfig {
    fn default() -> Self {
        PctConfig {
            max_boost_iter: 200,
            iter_folds: 5,
            prune_folds: 5,
            min_leaf: 15,
            weak_kind: WeakKind::SimpleLinear,
            seed: 0,
        }
    }
}

/// Fits a probability calibration tree: selects the boosting iteration
/// count by cross-validation at the root, grows the tree with warm-started
/// node models, and prunes it by cost-complexity on cross-validated RMSE.
/// `records` must carry already-transformed scores (see
/// [`crate::calibrators::assemble_score_vector`]).
pub fn fit_pct(
    records: &[ScoreRecord],
    schema: &[Attribute],
    class_names: &[String],
    score_kind: ScoreKind,
    config: &PctConfig,
) -> Result<(CalibrationTree, PruningRecord)> {
    validate_records(records, schema, class_names.len())?;
    let num_classes = class_names.len();
    let score_dim = records[0].scores.len();

    let score_rows: Vec<Vec<f64>> = records.iter().map(|r| r.scores.clone()).collect();
    let features = Features::from_rows(&score_rows)?;
    let labels: Vec<usize> = records.iter().map(|r| r.label).collect();

    let iter_folds = config.iter_folds.min(records.len());
    if iter_folds < 2 {
        return Err(CalibraError::InvalidData(
            "calibration needs at least two records".into(),
        ));
    }
    let iterations = crate::boost::select_iterations_cv(
        &features,
        &labels,
        num_classes,
        config.max_boost_iter,
        iter_folds,
        crate::derive_seed(config.seed, "pct-iterations"),
        config.weak_kind,
    )?;

    let grow_cfg = GrowConfig {
        iterations_per_node: iterations,
        min_leaf: config.min_leaf,
        weak_kind: config.weak_kind,
    };
    let root = grow_tree(records, schema, num_classes, &grow_cfg)?;
    let tree = CalibrationTree {
        schema: schema.to_vec(),
        class_names: class_names.to_vec(),
        score_dim,
        score_kind,
        iterations_per_node: iterations,
        root,
    };
    prune_tree(
        tree,
        records,
        config.prune_folds,
        crate::derive_seed(config.seed, "pct-prune"),
        &grow_cfg,
    )
}

fn validate_records(
    records: &[ScoreRecord],
    schema: &[Attribute],
    num_classes: usize,
) -> Result<()> {
    if records.is_empty() {
        return Err(CalibraError::InvalidData(
            "cannot fit a calibration tree on no records".into(),
        ));
    }
    let score_dim = records[0].scores.len();
    for (i, r) in records.iter().enumerate() {
        if r.attrs.len() != schema.len() {
            return Err(CalibraError::InvalidData(format!(
                "record {i} has {} attributes, schema has {}",
                r.attrs.len(),
                schema.len()
            )));
        }
        if r.scores.len() != score_dim {
            return Err(CalibraError::InvalidData(format!(
                "record {i} has {} scores, expected {score_dim}",
                r.scores.len()
            )));
        }
        if r.scores.iter().any(|s| !s.is_finite()) {
            return Err(CalibraError::InvalidData(format!(
                "record {i} has a non-finite score"
            )));
        }
        if r.label >= num_classes {
            return Err(CalibraError::InvalidData(format!(
                "record {i} has label {} but only {num_classes} classes",
                r.label
            )));
        }
        if r.attrs.iter().any(Cell::is_missing) {
            return Err(CalibraError::InvalidData(format!(
                "record {i} has missing attribute values; impute first"
            )));
        }
    }
    Ok(())
}

/// Builds score records from a complete dataset and row-aligned raw score
/// vectors, applying the log-odds transform for probability scores.
pub fn records_from_dataset(
    dataset: &Dataset,
    raw_scores: &[Vec<f64>],
    score_kind: ScoreKind,
) -> Result<Vec<ScoreRecord>> {
    if raw_scores.len() != dataset.num_instances() {
        return Err(CalibraError::InvalidData(format!(
            "{} score rows for {} instances",
            raw_scores.len(),
            dataset.num_instances()
        )));
    }
    dataset
        .rows
        .iter()
        .zip(&dataset.labels)
        .zip(raw_scores)
        .map(|((row, &label), raw)| {
            Ok(ScoreRecord {
                attrs: row.clone(),
                scores: crate::calibrators::assemble_score_vector(raw, score_kind)?,
                label,
            })
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::test_support::example_tree;
    use super::*;
    use approx::assert_abs_diff_eq;

    /// The instance from the published inference figure: x5 true, x8 false,
    /// score 2.389 routes to the (0.54, 0.27) leaf.
    #[test]
    fn example_instance_routes_to_expected_leaf() {
        let tree = example_tree();
        let mut attrs = vec![Cell::Cat(0); 10];
        attrs[7] = Cell::Cat(1); // x8 = false
        let p = tree.calibrate(&attrs, &[2.389]).unwrap();
        // Leaf model: F1 = 0.54 + 0.27 * 2.389 = 1.18503, so the softmax of
        // (F1, -F1) gives p1 = 1 / (1 + e^(-2 * 1.18503)).
        let f1: f64 = 0.54 + 0.27 * 2.389;
        let expected = 1.0 / (1.0 + (-2.0 * f1).exp());
        assert_abs_diff_eq!(p[0], expected, epsilon = 1e-12);
        assert_abs_diff_eq!(p[0] + p[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn right_leaf_at_zero_score() {
        let tree = example_tree();
        let mut attrs = vec![Cell::Cat(0); 10];
        attrs[4] = Cell::Cat(1); // x5 = false routes right
        let p = tree.calibrate(&attrs, &[0.0]).unwrap();
        // F1 = 1.61 at score 0: p1 = 1 / (1 + e^(-2 * 1.61)) = 0.9615.
        assert_abs_diff_eq!(p[0], 1.0 / (1.0 + (-3.22f64).exp()), epsilon = 1e-12);
        assert_abs_diff_eq!(p[0], 0.9615, epsilon = 5e-4);
    }

    #[test]
    fn unseen_categorical_routes_to_majority_branch() {
        let tree = example_tree();
        let mut attrs = vec![Cell::Cat(0); 10];
        attrs[4] = Cell::Missing; // unresolvable: majority branch is 0 (left)
        attrs[7] = Cell::Cat(1);
        let with_majority = tree.calibrate(&attrs, &[2.389]).unwrap();
        attrs[4] = Cell::Cat(0);
        let explicit_left = tree.calibrate(&attrs, &[2.389]).unwrap();
        assert_eq!(with_majority, explicit_left);
    }

    #[test]
    fn score_dimension_checked() {
        let tree = example_tree();
        let attrs = vec![Cell::Cat(0); 10];
        assert!(tree.calibrate(&attrs, &[1.0, 2.0]).is_err());
    }
}
