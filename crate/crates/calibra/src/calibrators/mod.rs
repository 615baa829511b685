//! Baseline calibration methods (Platt scaling, isotonic regression),
//! one-vs-rest wrappers for multiclass problems, and the score transforms
//! shared by all methods.

mod isotonic;
mod platt;

pub use isotonic::{apply_isotonic, pav_fit, IsotonicModel};
pub use platt::{
    apply_platt, fit_platt, platt_loss_and_gradient, platt_targets, PlattModel,
    DEFAULT_MAX_NEWTON, DEFAULT_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{CalibraError, Result};

/// Probability clipping bound for the log-odds transform; caps transformed
/// values near +/-16.1.
pub const LOG_ODDS_CLIP: f64 = 1e-7;

/// What the base model's output scores are. Probabilities are log-odds
/// transformed before linear calibrators see them; margin-style scores
/// (e.g. SVM outputs) pass through untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Probability,
    Margin,
}

/// Log-odds of a single probability, with clipping at the endpoints.
pub fn logodds(p: f64) -> f64 {
    let p = p.clamp(LOG_ODDS_CLIP, 1.0 - LOG_ODDS_CLIP);
    (p / (1.0 - p)).ln()
}

/// Componentwise log-odds transform of a probability vector.
pub fn logodds_transform(probs: &[f64]) -> Vec<f64> {
    probs.iter().map(|&p| logodds(p)).collect()
}

/// Builds the score vector handed to linear calibration models: log-odds of
/// each probability for probability-producing base learners, the raw values
/// for margin-style scores.
pub fn assemble_score_vector(per_class_outputs: &[f64], kind: ScoreKind) -> Result<Vec<f64>> {
    if per_class_outputs.is_empty() {
        return Err(CalibraError::InvalidData("empty score vector".into()));
    }
    if per_class_outputs.iter().any(|v| !v.is_finite()) {
        return Err(CalibraError::InvalidData(
            "non-finite value in score vector".into(),
        ));
    }
    Ok(match kind {
        ScoreKind::Probability => logodds_transform(per_class_outputs),
        ScoreKind::Margin => per_class_outputs.to_vec(),
    })
}

/// One fitted binary calibrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BinaryCalibrator {
    Platt(PlattModel),
    Isotonic(IsotonicModel),
}

impl BinaryCalibrator {
    pub fn apply(&self, score: f64) -> f64 {
        match self {
            BinaryCalibrator::Platt(m) => m.apply(&[score]),
            BinaryCalibrator::Isotonic(m) => m.apply(score),
        }
    }
}

/// One-vs-rest wrapper: one binary calibrator per class, outputs normalized
/// to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvRCalibrator {
    pub per_class: Vec<BinaryCalibrator>,
}

impl OvRCalibrator {
    /// Applies each class's calibrator to its class-vs-rest score and
    /// normalizes. An all-zero raw vector maps to the uniform distribution.
    pub fn calibrate(&self, scores: &[f64]) -> Result<Vec<f64>> {
        ovr_calibrate(self, scores)
    }
}

pub fn ovr_calibrate(cal: &OvRCalibrator, scores: &[f64]) -> Result<Vec<f64>> {
    if scores.len() != cal.per_class.len() {
        return Err(CalibraError::InvalidData(format!(
            "expected {} class scores, got {}",
            cal.per_class.len(),
            scores.len()
        )));
    }
    let raw: Vec<f64> = cal
        .per_class
        .iter()
        .zip(scores)
        .map(|(c, &s)| c.apply(s))
        .collect();
    Ok(normalize_or_uniform(&raw))
}

/// Normalizes nonnegative class outputs to sum to one; all-zero input maps
/// to the uniform distribution.
pub fn normalize_or_uniform(raw: &[f64]) -> Vec<f64> {
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        vec![1.0 / raw.len() as f64; raw.len()]
    } else {
        raw.iter().map(|&v| v / sum).collect()
    }
}

/// Full Platt-scaling baseline over a dataset's score vectors: a single
/// sigmoid on the positive-class score for binary problems, one-vs-rest
/// sigmoids otherwise. Scores are transformed according to their kind
/// before fitting and application.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlattCalibrator {
    pub score_kind: ScoreKind,
    pub num_classes: usize,
    pub mode: PlattMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PlattMode {
    /// Binary: one sigmoid on the score at `score_index`; output (1-p, p).
    Binary {
        score_index: usize,
        model: PlattModel,
    },
    /// Multiclass one-vs-rest: class j gets a sigmoid on score j.
    OneVsRest { models: Vec<PlattModel> },
}

impl PlattCalibrator {
    pub fn fit(
        raw_scores: &[Vec<f64>],
        labels: &[usize],
        num_classes: usize,
        score_kind: ScoreKind,
    ) -> Result<PlattCalibrator> {
        let transformed = transform_rows(raw_scores, score_kind)?;
        let dim = score_dim(&transformed)?;
        if num_classes == 2 {
            // The positive class is index 1; with a single-column margin
            // score that column serves directly.
            let score_index = if dim == 1 { 0 } else { 1 };
            let cols: Vec<Vec<f64>> = transformed
                .iter()
                .map(|s| vec![s[score_index]])
                .collect();
            let flags: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
            let model = fit_platt(&cols, &flags, DEFAULT_MAX_NEWTON, DEFAULT_TOL)?;
            Ok(PlattCalibrator {
                score_kind,
                num_classes,
                mode: PlattMode::Binary { score_index, model },
            })
        } else {
            if dim != num_classes {
                return Err(CalibraError::InvalidData(format!(
                    "one-vs-rest needs one score per class: got {dim} for {num_classes} classes"
                )));
            }
            let mut models = Vec::with_capacity(num_classes);
            for j in 0..num_classes {
                let cols: Vec<Vec<f64>> = transformed.iter().map(|s| vec![s[j]]).collect();
                let flags: Vec<bool> = labels.iter().map(|&l| l == j).collect();
                models.push(fit_platt(&cols, &flags, DEFAULT_MAX_NEWTON, DEFAULT_TOL)?);
            }
            Ok(PlattCalibrator {
                score_kind,
                num_classes,
                mode: PlattMode::OneVsRest { models },
            })
        }
    }

    /// Calibrated class distribution for one raw score vector.
    pub fn calibrate(&self, raw_scores: &[f64]) -> Result<Vec<f64>> {
        let s = assemble_score_vector(raw_scores, self.score_kind)?;
        match &self.mode {
            PlattMode::Binary { score_index, model } => {
                if *score_index >= s.len() {
                    return Err(CalibraError::InvalidData(
                        "score vector shorter than expected".into(),
                    ));
                }
                let p = model.apply(&[s[*score_index]]);
                Ok(vec![1.0 - p, p])
            }
            PlattMode::OneVsRest { models } => {
                if s.len() != models.len() {
                    return Err(CalibraError::InvalidData(format!(
                        "expected {} class scores, got {}",
                        models.len(),
                        s.len()
                    )));
                }
                let cal = OvRCalibrator {
                    per_class: models
                        .iter()
                        .map(|m| BinaryCalibrator::Platt(m.clone()))
                        .collect(),
                };
                cal.calibrate(&s)
            }
        }
    }
}

/// Full isotonic-regression baseline: a single monotone fit on the
/// positive-class score for binary problems, one-vs-rest otherwise.
/// Raw scores are used directly; the monotone fit absorbs any monotone
/// transform, so probabilities need no log-odds step here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicCalibrator {
    pub score_kind: ScoreKind,
    pub num_classes: usize,
    pub mode: IsotonicMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum IsotonicMode {
    Binary {
        score_index: usize,
        model: IsotonicModel,
    },
    OneVsRest { models: Vec<IsotonicModel> },
}

impl IsotonicCalibrator {
    pub fn fit(
        raw_scores: &[Vec<f64>],
        labels: &[usize],
        num_classes: usize,
        score_kind: ScoreKind,
    ) -> Result<IsotonicCalibrator> {
        let dim = score_dim(raw_scores)?;
        if num_classes == 2 {
            let score_index = if dim == 1 { 0 } else { 1 };
            let pairs: Vec<(f64, f64, f64)> = raw_scores
                .iter()
                .zip(labels)
                .map(|(s, &l)| (s[score_index], if l == 1 { 1.0 } else { 0.0 }, 1.0))
                .collect();
            let model = pav_fit(&pairs)?;
            Ok(IsotonicCalibrator {
                score_kind,
                num_classes,
                mode: IsotonicMode::Binary { score_index, model },
            })
        } else {
            if dim != num_classes {
                return Err(CalibraError::InvalidData(format!(
                    "one-vs-rest needs one score per class: got {dim} for {num_classes} classes"
                )));
            }
            let mut models = Vec::with_capacity(num_classes);
            for j in 0..num_classes {
                let pairs: Vec<(f64, f64, f64)> = raw_scores
                    .iter()
                    .zip(labels)
                    .map(|(s, &l)| (s[j], if l == j { 1.0 } else { 0.0 }, 1.0))
                    .collect();
                models.push(pav_fit(&pairs)?);
            }
            Ok(IsotonicCalibrator {
                score_kind,
                num_classes,
                mode: IsotonicMode::OneVsRest { models },
            })
        }
    }

    pub fn calibrate(&self, raw_scores: &[f64]) -> Result<Vec<f64>> {
        match &self.mode {
            IsotonicMode::Binary { score_index, model } => {
                if *score_index >= raw_scores.len() {
                    return Err(CalibraError::InvalidData(
                        "score vector shorter than expected".into(),
                    ));
                }
                let p = model.apply(raw_scores[*score_index]).clamp(0.0, 1.0);
                Ok(vec![1.0 - p, p])
            }
            IsotonicMode::OneVsRest { models } => {
                if raw_scores.len() != models.len() {
                    return Err(CalibraError::InvalidData(format!(
                        "expected {} class scores, got {}",
                        models.len(),
                        raw_scores.len()
                    )));
                }
                let cal = OvRCalibrator {
                    per_class: models
                        .iter()
                        .map(|m| BinaryCalibrator::Isotonic(m.clone()))
                        .collect(),
                };
                cal.calibrate(raw_scores)
            }
        }
    }
}

fn transform_rows(rows: &[Vec<f64>], kind: ScoreKind) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| assemble_score_vector(r, kind))
        .collect()
}

fn score_dim(rows: &[Vec<f64>]) -> Result<usize> {
    let dim = rows
        .first()
        .map(|r| r.len())
        .ok_or_else(|| CalibraError::InvalidData("no score rows".into()))?;
    if rows.iter().any(|r| r.len() != dim) {
        return Err(CalibraError::InvalidData("ragged score rows".into()));
    }
    Ok(dim)
}
