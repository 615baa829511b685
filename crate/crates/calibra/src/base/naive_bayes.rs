//! Naive Bayes: Gaussian likelihoods for numeric attributes, add-one
//! smoothed frequency tables for categorical attributes.

use serde::{Deserialize, Serialize};

use crate::data::{AttrKind, Cell, Dataset};
use crate::error::{CalibraError, Result};

const VARIANCE_FLOOR_BASE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttrStats {
    /// Per-class (mean, variance), variance floored.
    Numeric { per_class: Vec<(f64, f64)> },
    /// Per-class smoothed value frequencies; each row sums to one.
    Categorical { per_class: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub class_names: Vec<String>,
    pub priors: Vec<f64>,
    pub attrs: Vec<AttrStats>,
}

/// Fits class priors from frequencies, Gaussian parameters per numeric
/// attribute (variance floored at 1e-9 times the squared attribute range,
/// at least 1e-9), and add-one smoothed tables per categorical attribute.
pub fn fit_naive_bayes(dataset: &Dataset) -> Result<NaiveBayesModel> {
    if !dataset.is_complete() {
        return Err(CalibraError::InvalidData(
            "naive Bayes requires imputed data".into(),
        ));
    }
    let n = dataset.num_instances();
    let m = dataset.num_classes();
    if n == 0 {
        return Err(CalibraError::InvalidData("empty dataset".into()));
    }
    let mut class_counts = vec![0usize; m];
    for &l in &dataset.labels {
        class_counts[l] += 1;
    }
    if let Some(empty) = class_counts.iter().position(|&c| c == 0) {
        return Err(CalibraError::InvalidData(format!(
            "class {} has no training instances",
            dataset.class_names[empty]
        )));
    }
    let priors: Vec<f64> = class_counts.iter().map(|&c| c as f64 / n as f64).collect();

    let mut attrs = Vec::with_capacity(dataset.num_attributes());
    for (j, attr) in dataset.attributes.iter().enumerate() {
        let stats = match &attr.kind {
            AttrKind::Numeric => {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                let mut sums = vec![0.0f64; m];
                for (row, &l) in dataset.rows.iter().zip(&dataset.labels) {
                    let v = row[j].as_num().expect("complete numeric column");
                    min = min.min(v);
                    max = max.max(v);
                    sums[l] += v;
                }
                let range = max - min;
                let floor = (VARIANCE_FLOOR_BASE * range * range).max(VARIANCE_FLOOR_BASE);
                let means: Vec<f64> = sums
                    .iter()
                    .zip(&class_counts)
                    .map(|(s, &c)| s / c as f64)
                    .collect();
                let mut sq = vec![0.0f64; m];
                for (row, &l) in dataset.rows.iter().zip(&dataset.labels) {
                    let v = row[j].as_num().expect("complete numeric column");
                    let d = v - means[l];
                    sq[l] += d * d;
                }
                let vars: Vec<f64> = sq
                    .iter()
                    .zip(&class_counts)
                    .map(|(s, &c)| (s / c as f64).max(floor))
                    .collect();
                AttrStats::Numeric {
                    per_class: means.into_iter().zip(vars).collect(),
                }
            }
            AttrKind::Categorical(values) => {
                let v = values.len();
                let mut counts = vec![vec![0usize; v]; m];
                for (row, &l) in dataset.rows.iter().zip(&dataset.labels) {
                    let idx = row[j].as_cat().expect("complete categorical column");
                    counts[l][idx] += 1;
                }
                let per_class: Vec<Vec<f64>> = counts
                    .iter()
                    .zip(&class_counts)
                    .map(|(row, &c)| {
                        row.iter()
                            .map(|&cnt| (cnt as f64 + 1.0) / (c as f64 + v as f64))
                            .collect()
                    })
                    .collect();
                AttrStats::Categorical { per_class }
            }
        };
        attrs.push(stats);
    }
    Ok(NaiveBayesModel {
        class_names: dataset.class_names.clone(),
        priors,
        attrs,
    })
}

/// Class posterior for one instance: log-domain accumulation followed by a
/// softmax-style normalization. Missing cells contribute nothing.
pub fn predict_nb(model: &NaiveBayesModel, row: &[Cell]) -> Vec<f64> {
    let m = model.priors.len();
    let mut log_post: Vec<f64> = model.priors.iter().map(|p| p.ln()).collect();
    for (j, stats) in model.attrs.iter().enumerate() {
        match (row.get(j), stats) {
            (Some(Cell::Num(v)), AttrStats::Numeric { per_class }) => {
                for (c, &(mean, var)) in per_class.iter().enumerate() {
                    let d = v - mean;
                    log_post[c] +=
                        -0.5 * (2.0 * std::f64::consts::PI * var).ln() - d * d / (2.0 * var);
                }
            }
            (Some(Cell::Cat(idx)), AttrStats::Categorical { per_class }) => {
                for c in 0..m {
                    if let Some(&f) = per_class[c].get(*idx) {
                        log_post[c] += f.ln();
                    }
                }
            }
            _ => {}
        }
    }
    crate::boost::softmax_probs(&log_post)
}
