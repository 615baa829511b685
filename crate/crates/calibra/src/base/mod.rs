//! Built-in uncalibrated base classifiers and the internal cross-validation
//! protocol that produces calibration-training scores.

mod boosted;
mod naive_bayes;
mod scores;

pub use boosted::{fit_boosted, BoostedModel, BOOSTED_ITERATIONS};
pub use naive_bayes::{fit_naive_bayes, predict_nb, AttrStats, NaiveBayesModel};
pub use scores::{
    collect_scores, read_score_table, write_score_table, ScoreRow, ScoreTable, INTERNAL_FOLDS,
};

use serde::{Deserialize, Serialize};

use crate::boost::WeakKind;
use crate::data::{Cell, Dataset};
use crate::error::{CalibraError, Result};

/// Which base learner to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseLearnerKind {
    NaiveBayes,
    BoostedStumps,
    BoostedTrees,
}

impl BaseLearnerKind {
    pub fn parse(s: &str) -> Result<BaseLearnerKind> {
        match s {
            "nb" | "naive-bayes" => Ok(BaseLearnerKind::NaiveBayes),
            "stumps" | "boosted-stumps" => Ok(BaseLearnerKind::BoostedStumps),
            "trees" | "boosted-trees" => Ok(BaseLearnerKind::BoostedTrees),
            other => Err(CalibraError::InvalidArgument(format!(
                "unknown base learner: {other} (expected nb, stumps or trees)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaseLearnerKind::NaiveBayes => "nb",
            BaseLearnerKind::BoostedStumps => "stumps",
            BaseLearnerKind::BoostedTrees => "trees",
        }
    }
}

/// A fitted base model with a uniform prediction interface over typed rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaseModel {
    NaiveBayes(NaiveBayesModel),
    Boosted(BoostedModel),
}

impl BaseModel {
    pub fn fit(kind: BaseLearnerKind, dataset: &Dataset) -> Result<BaseModel> {
        match kind {
            BaseLearnerKind::NaiveBayes => {
                Ok(BaseModel::NaiveBayes(fit_naive_bayes(dataset)?))
            }
            BaseLearnerKind::BoostedStumps => {
                Ok(BaseModel::Boosted(fit_boosted(dataset, WeakKind::Stump)?))
            }
            BaseLearnerKind::BoostedTrees => {
                Ok(BaseModel::Boosted(fit_boosted(dataset, WeakKind::tree3())?))
            }
        }
    }

    /// Class probability estimates for one typed row.
    pub fn predict(&self, row: &[Cell]) -> Result<Vec<f64>> {
        match self {
            BaseModel::NaiveBayes(m) => Ok(predict_nb(m, row)),
            BaseModel::Boosted(m) => m.predict(row),
        }
    }
}
