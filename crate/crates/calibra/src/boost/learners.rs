//! Weak learners for LogitBoost: single-attribute linear regression,
//! regression stumps, and depth-limited regression trees, all fitted by
//! weighted least squares.

use serde::{Deserialize, Serialize};

use crate::error::{CalibraError, Result};

/// Dense numeric feature matrix, row-major.
#[derive(Debug, Clone)]
pub struct Features {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Features {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Features> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(CalibraError::InvalidData("ragged feature rows".into()));
            }
            data.extend_from_slice(row);
        }
        Ok(Features {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    /// Per-column row orderings by ascending value. Computed once per matrix
    /// and reused across boosting iterations by the stump and tree fitters.
    pub fn column_orders(&self) -> Vec<Vec<u32>> {
        (0..self.n_cols)
            .map(|c| {
                let mut order: Vec<u32> = (0..self.n_rows as u32).collect();
                order.sort_by(|&a, &b| {
                    self.get(a as usize, c)
                        .partial_cmp(&self.get(b as usize, c))
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                order
            })
            .collect()
    }
}

/// A node of a depth-limited regression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    Leaf {
        value: f64,
    },
    Split {
        attr: usize,
        threshold: f64,
        left: Box<RegNode>,
        right: Box<RegNode>,
    },
}

impl RegNode {
    pub fn eval(&self, row: &[f64]) -> f64 {
        match self {
            RegNode::Leaf { value } => *value,
            RegNode::Split {
                attr,
                threshold,
                left,
                right,
            } => {
                if row[*attr] <= *threshold {
                    left.eval(row)
                } else {
                    right.eval(row)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            RegNode::Leaf { .. } => 0,
            RegNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// One fitted weak learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeakLearner {
    SimpleLinear {
        attr: usize,
        slope: f64,
        intercept: f64,
    },
    Stump {
        attr: usize,
        threshold: f64,
        left: f64,
        right: f64,
    },
    Tree {
        root: RegNode,
    },
}

impl WeakLearner {
    pub fn eval(&self, row: &[f64]) -> f64 {
        match self {
            WeakLearner::SimpleLinear {
                attr,
                slope,
                intercept,
            } => slope * row[*attr] + intercept,
            WeakLearner::Stump {
                attr,
                threshold,
                left,
                right,
            } => {
                if row[*attr] <= *threshold {
                    *left
                } else {
                    *right
                }
            }
            WeakLearner::Tree { root } => root.eval(row),
        }
    }
}

fn weighted_mean(targets: &[f64], weights: &[f64]) -> f64 {
    let sw: f64 = weights.iter().sum();
    if sw <= 0.0 {
        return 0.0;
    }
    targets
        .iter()
        .zip(weights)
        .map(|(t, w)| t * w)
        .sum::<f64>()
        / sw
}

const CONSTANT_COLUMN_EPS: f64 = 1e-12;

/// Fits one weighted least-squares line per attribute and returns the
/// attribute with the smallest weighted SSE (ties go to the lowest index).
/// A constant attribute yields slope 0 and intercept equal to the weighted
/// target mean.
pub fn fit_simple_linear(
    features: &Features,
    targets: &[f64],
    weights: &[f64],
) -> Result<WeakLearner> {
    let n = features.n_rows();
    if n == 0 || features.n_cols() == 0 {
        return Err(CalibraError::InvalidData(
            "cannot fit a simple linear learner on empty input".into(),
        ));
    }
    debug_assert_eq!(targets.len(), n);
    debug_assert_eq!(weights.len(), n);

    let sw: f64 = weights.iter().sum();
    if !(sw > 0.0) {
        return Err(CalibraError::InvalidData(
            "weights must be nonnegative with positive sum".into(),
        ));
    }
    let target_mean = targets
        .iter()
        .zip(weights)
        .map(|(t, w)| t * w)
        .sum::<f64>()
        / sw;

    let mut best: Option<(f64, usize, f64, f64)> = None; // (sse, attr, slope, intercept)
    for col in 0..features.n_cols() {
        let mut x_mean = 0.0;
        for i in 0..n {
            x_mean += weights[i] * features.get(i, col);
        }
        x_mean /= sw;
        let mut sxx = 0.0;
        let mut sxz = 0.0;
        for i in 0..n {
            let dx = features.get(i, col) - x_mean;
            sxx += weights[i] * dx * dx;
            sxz += weights[i] * dx * (targets[i] - target_mean);
        }
        let (slope, intercept) = if sxx <= CONSTANT_COLUMN_EPS {
            (0.0, target_mean)
        } else {
            let s = sxz / sxx;
            (s, target_mean - s * x_mean)
        };
        let mut sse = 0.0;
        for i in 0..n {
            let r = targets[i] - (slope * features.get(i, col) + intercept);
            sse += weights[i] * r * r;
        }
        if best.map_or(true, |(b, ..)| sse < b) {
            best = Some((sse, col, slope, intercept));
        }
    }
    let (_, attr, slope, intercept) = best.expect("at least one column");
    if !slope.is_finite() || !intercept.is_finite() {
        return Err(CalibraError::Numeric(
            "non-finite coefficients in simple linear fit".into(),
        ));
    }
    Ok(WeakLearner::SimpleLinear {
        attr,
        slope,
        intercept,
    })
}

struct StumpSplit {
    attr: usize,
    threshold: f64,
    left: f64,
    right: f64,
    score: f64,
}

/// Scans every attribute for the binary split minimizing weighted SSE over
/// the active rows. Returns `None` when no attribute has two distinct values.
fn best_stump_split(
    features: &Features,
    orders: &[Vec<u32>],
    targets: &[f64],
    weights: &[f64],
    active: &[bool],
) -> Option<StumpSplit> {
    let mut total_w = 0.0;
    let mut total_s = 0.0;
    for i in 0..features.n_rows() {
        if active[i] {
            total_w += weights[i];
            total_s += weights[i] * targets[i];
        }
    }
    if total_w <= 0.0 {
        return None;
    }

    let mut best: Option<StumpSplit> = None;
    for (attr, order) in orders.iter().enumerate() {
        let mut left_w = 0.0;
        let mut left_s = 0.0;
        let mut prev_value: Option<f64> = None;
        for &ri in order {
            let i = ri as usize;
            if !active[i] {
                continue;
            }
            let value = features.get(i, attr);
            if let Some(pv) = prev_value {
                if value > pv && left_w > 0.0 && total_w - left_w > 0.0 {
                    let right_w = total_w - left_w;
                    let right_s = total_s - left_s;
                    let score = left_s * left_s / left_w + right_s * right_s / right_w;
                    if best.as_ref().map_or(true, |b| score > b.score) {
                        best = Some(StumpSplit {
                            attr,
                            threshold: pv + (value - pv) / 2.0,
                            left: left_s / left_w,
                            right: right_s / right_w,
                            score,
                        });
                    }
                }
            }
            left_w += weights[i];
            left_s += weights[i] * targets[i];
            prev_value = Some(value);
        }
    }
    best
}

/// Fits a regression stump minimizing weighted SSE. Falls back to a constant
/// stump at the weighted target mean when no split exists.
pub fn fit_stump(
    features: &Features,
    orders: &[Vec<u32>],
    targets: &[f64],
    weights: &[f64],
) -> Result<WeakLearner> {
    if features.n_rows() == 0 {
        return Err(CalibraError::InvalidData(
            "cannot fit a stump on empty input".into(),
        ));
    }
    let active = vec![true; features.n_rows()];
    match best_stump_split(features, orders, targets, weights, &active) {
        Some(s) => Ok(WeakLearner::Stump {
            attr: s.attr,
            threshold: s.threshold,
            left: s.left,
            right: s.right,
        }),
        None => {
            let mean = weighted_mean(targets, weights);
            Ok(WeakLearner::Stump {
                attr: 0,
                threshold: f64::INFINITY,
                left: mean,
                right: mean,
            })
        }
    }
}

/// Fits a depth-limited regression tree by greedy weighted-SSE splitting.
/// No internal pruning; every leaf keeps at least one instance.
pub fn fit_regression_tree(
    features: &Features,
    orders: &[Vec<u32>],
    targets: &[f64],
    weights: &[f64],
    max_depth: usize,
) -> Result<WeakLearner> {
    if features.n_rows() == 0 {
        return Err(CalibraError::InvalidData(
            "cannot fit a regression tree on empty input".into(),
        ));
    }
    let active = vec![true; features.n_rows()];
    let root = build_reg_node(features, orders, targets, weights, active, max_depth);
    Ok(WeakLearner::Tree { root })
}

fn build_reg_node(
    features: &Features,
    orders: &[Vec<u32>],
    targets: &[f64],
    weights: &[f64],
    active: Vec<bool>,
    depth_left: usize,
) -> RegNode {
    let mut value_num = 0.0;
    let mut value_den = 0.0;
    for i in 0..features.n_rows() {
        if active[i] {
            value_num += weights[i] * targets[i];
            value_den += weights[i];
        }
    }
    let value = if value_den > 0.0 {
        value_num / value_den
    } else {
        0.0
    };
    if depth_left == 0 {
        return RegNode::Leaf { value };
    }
    let Some(split) = best_stump_split(features, orders, targets, weights, &active) else {
        return RegNode::Leaf { value };
    };
    let mut left_active = vec![false; active.len()];
    let mut right_active = vec![false; active.len()];
    for i in 0..active.len() {
        if active[i] {
            if features.get(i, split.attr) <= split.threshold {
                left_active[i] = true;
            } else {
                right_active[i] = true;
            }
        }
    }
    RegNode::Split {
        attr: split.attr,
        threshold: split.threshold,
        left: Box::new(build_reg_node(
            features,
            orders,
            targets,
            weights,
            left_active,
            depth_left - 1,
        )),
        right: Box::new(build_reg_node(
            features,
            orders,
            targets,
            weights,
            right_active,
            depth_left - 1,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn matrix(rows: &[&[f64]]) -> Features {
        Features::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn exact_line_through_two_points() {
        let f = matrix(&[&[0.0], &[1.0]]);
        let w = vec![1.0, 1.0];
        let learner = fit_simple_linear(&f, &[0.0, 1.0], &w).unwrap();
        match learner {
            WeakLearner::SimpleLinear {
                attr,
                slope,
                intercept,
            } => {
                assert_eq!(attr, 0);
                assert_abs_diff_eq!(slope, 1.0, epsilon = 1e-12);
                assert_abs_diff_eq!(intercept, 0.0, epsilon = 1e-12);
            }
            other => panic!("unexpected learner {other:?}"),
        }
    }

    #[test]
    fn constant_attribute_gets_weighted_mean() {
        let f = matrix(&[&[5.0], &[5.0]]);
        let learner = fit_simple_linear(&f, &[2.0, 4.0], &[1.0, 1.0]).unwrap();
        match learner {
            WeakLearner::SimpleLinear {
                slope, intercept, ..
            } => {
                assert_eq!(slope, 0.0);
                assert_abs_diff_eq!(intercept, 3.0, epsilon = 1e-12);
            }
            other => panic!("unexpected learner {other:?}"),
        }
    }

    #[test]
    fn picks_attribute_with_smaller_sse() {
        // Attribute 1 fits the targets exactly, attribute 0 does not.
        let f = matrix(&[&[1.0, 0.0], &[1.0, 1.0], &[0.0, 2.0], &[0.0, 3.0]]);
        let targets = [0.0, 1.0, 2.0, 3.0];
        let w = vec![1.0; 4];
        let learner = fit_simple_linear(&f, &targets, &w).unwrap();
        match learner {
            WeakLearner::SimpleLinear { attr, .. } => assert_eq!(attr, 1),
            other => panic!("unexpected learner {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        let f = Features::from_rows(&[]).unwrap();
        assert!(fit_simple_linear(&f, &[], &[]).is_err());
    }

    #[test]
    fn stump_splits_at_midpoint() {
        let f = matrix(&[&[1.0], &[2.0], &[10.0], &[11.0]]);
        let orders = f.column_orders();
        let learner = fit_stump(&f, &orders, &[0.0, 0.0, 1.0, 1.0], &[1.0; 4]).unwrap();
        match learner {
            WeakLearner::Stump {
                threshold,
                left,
                right,
                ..
            } => {
                assert_abs_diff_eq!(threshold, 6.0, epsilon = 1e-12);
                assert_abs_diff_eq!(left, 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(right, 1.0, epsilon = 1e-12);
            }
            other => panic!("unexpected learner {other:?}"),
        }
    }

    #[test]
    fn stump_on_constant_column_is_constant() {
        let f = matrix(&[&[3.0], &[3.0]]);
        let orders = f.column_orders();
        let learner = fit_stump(&f, &orders, &[1.0, 3.0], &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(learner.eval(&[3.0]), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(learner.eval(&[100.0]), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn regression_tree_respects_max_depth() {
        let rows: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let targets: Vec<f64> = (0..32).map(|i| (i * i) as f64).collect();
        let f = Features::from_rows(&rows).unwrap();
        let orders = f.column_orders();
        let learner =
            fit_regression_tree(&f, &orders, &targets, &vec![1.0; 32], 3).unwrap();
        match learner {
            WeakLearner::Tree { root } => assert!(root.depth() <= 3),
            other => panic!("unexpected learner {other:?}"),
        }
    }

    #[test]
    fn regression_tree_fits_step_function_exactly() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let targets = vec![0.0, 0.0, 0.0, 0.0, 5.0, 5.0, 5.0, 5.0];
        let f = Features::from_rows(&rows).unwrap();
        let orders = f.column_orders();
        let learner = fit_regression_tree(&f, &orders, &targets, &vec![1.0; 8], 3).unwrap();
        for i in 0..8 {
            assert_abs_diff_eq!(learner.eval(&[i as f64]), targets[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn weighted_fit_tracks_heavy_points() {
        let f = matrix(&[&[0.0], &[1.0], &[2.0]]);
        // Heavy weights on the first two points force the line through them.
        let learner =
            fit_simple_linear(&f, &[0.0, 1.0, 100.0], &[1e6, 1e6, 1e-6]).unwrap();
        match learner {
            WeakLearner::SimpleLinear {
                slope, intercept, ..
            } => {
                assert_abs_diff_eq!(slope, 1.0, epsilon = 1e-3);
                assert_abs_diff_eq!(intercept, 0.0, epsilon = 1e-3);
            }
            other => panic!("unexpected learner {other:?}"),
        }
    }
}
