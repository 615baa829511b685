//! Internal cross-validation protocol for collecting calibration-training
//! scores, and the ScoreTable CSV format (also the ingestion path for
//! external score files).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::base::BaseModel;
use crate::base::BaseLearnerKind;
use crate::calibrators::ScoreKind;
use crate::data::{stratified_folds, AttrKind, Attribute, Cell, Dataset};
use crate::error::{CalibraError, Result};

pub const INTERNAL_FOLDS: usize = 5;

/// One calibration-training row: original attributes, the base model's raw
/// output scores for the instance, the true label, and which internal fold
/// produced the scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub attrs: Vec<Cell>,
    pub scores: Vec<f64>,
    pub label: usize,
    pub fold: usize,
}

/// Scores for every training instance, each produced by a model that never
/// saw that instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub attributes: Vec<Attribute>,
    pub class_names: Vec<String>,
    pub score_kind: ScoreKind,
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn num_scores(&self) -> usize {
        self.rows.first().map_or(0, |r| r.scores.len())
    }

    pub fn labels(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn raw_score_rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.scores.clone()).collect()
    }

    /// Converts to calibration-tree records, applying the score transform.
    pub fn to_records(&self) -> Result<Vec<crate::pct::ScoreRecord>> {
        self.rows
            .iter()
            .map(|r| {
                Ok(crate::pct::ScoreRecord {
                    attrs: r.attrs.clone(),
                    scores: crate::calibrators::assemble_score_vector(&r.scores, self.score_kind)?,
                    label: r.label,
                })
            })
            .collect()
    }
}

/// Collects class probability estimates by stratified internal
/// cross-validation: each fold's instances are scored by a base model
/// trained on the remaining folds, so no row's score comes from a model
/// that saw that row. The dataset must be imputed.
pub fn collect_scores(
    learner: BaseLearnerKind,
    dataset: &Dataset,
    seed: u64,
) -> Result<ScoreTable> {
    if !dataset.is_complete() {
        return Err(CalibraError::InvalidData(
            "collect_scores requires imputed data".into(),
        ));
    }
    let n = dataset.num_instances();
    let folds = INTERNAL_FOLDS.min(n);
    if folds < 2 {
        return Err(CalibraError::InvalidData(
            "score collection needs at least two instances".into(),
        ));
    }
    let mut class_counts = vec![0usize; dataset.num_classes()];
    for &l in &dataset.labels {
        class_counts[l] += 1;
    }
    for (c, &count) in class_counts.iter().enumerate() {
        if count > 0 && count < folds {
            log::warn!(
                "class {} has only {count} instances for {folds}-fold score collection; folds built best-effort",
                dataset.class_names[c]
            );
        }
    }

    let assignment = stratified_folds(dataset, folds, seed)?;
    let mut rows: Vec<Option<ScoreRow>> = vec![None; n];
    for fold in 0..folds {
        let train_idx = assignment.train_indices(fold);
        let test_idx = assignment.test_indices(fold);
        let train = dataset.subset(&train_idx);
        let model = BaseModel::fit(learner, &train)?;
        for &i in &test_idx {
            let scores = model.predict(&dataset.rows[i])?;
            rows[i] = Some(ScoreRow {
                attrs: dataset.rows[i].clone(),
                scores,
                label: dataset.labels[i],
                fold,
            });
        }
    }
    let rows: Vec<ScoreRow> = rows
        .into_iter()
        .map(|r| r.expect("every instance scored by exactly one fold"))
        .collect();
    Ok(ScoreTable {
        attributes: dataset.attributes.clone(),
        class_names: dataset.class_names.clone(),
        score_kind: ScoreKind::Probability,
        rows,
    })
}

/// Writes the table as CSV: `attr_<name>..., score_0..score_{k-1}, label, fold`.
pub fn write_score_table(table: &ScoreTable, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = table
        .attributes
        .iter()
        .map(|a| format!("attr_{}", a.name))
        .collect();
    for j in 0..table.num_scores() {
        header.push(format!("score_{j}"));
    }
    header.push("label".into());
    header.push("fold".into());
    writer.write_record(&header)?;
    for row in &table.rows {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for (cell, attr) in row.attrs.iter().zip(&table.attributes) {
            record.push(match (cell, &attr.kind) {
                (Cell::Missing, _) => String::new(),
                (Cell::Num(v), _) => format!("{v}"),
                (Cell::Cat(i), AttrKind::Categorical(values)) => values[*i].clone(),
                (Cell::Cat(i), AttrKind::Numeric) => i.to_string(),
            });
        }
        for s in &row.scores {
            record.push(format!("{s}"));
        }
        record.push(table.class_names[row.label].clone());
        record.push(row.fold.to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a ScoreTable CSV. When `dataset` is given, attribute cells, labels
/// and the schema come from it (rows aligned by order) and only the score
/// and fold columns are taken from the file; otherwise the file must be
/// self-contained (attr_* columns plus label).
pub fn read_score_table(
    path: &Path,
    dataset: Option<&Dataset>,
    score_kind: ScoreKind,
) -> Result<ScoreTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let score_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("score_"))
        .map(|(i, _)| i)
        .collect();
    if score_cols.is_empty() {
        return Err(CalibraError::InvalidData(format!(
            "{}: no score_* columns found",
            path.display()
        )));
    }
    let label_col = headers.iter().position(|h| h == "label");
    let fold_col = headers.iter().position(|h| h == "fold");
    let attr_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("attr_"))
        .map(|(i, h)| (i, h["attr_".len()..].to_string()))
        .collect();

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        raw_rows.push(record.iter().map(|f| f.to_string()).collect());
    }

    if let Some(d) = dataset {
        if raw_rows.len() != d.num_instances() {
            return Err(CalibraError::InvalidData(format!(
                "score file has {} rows, dataset has {} instances",
                raw_rows.len(),
                d.num_instances()
            )));
        }
        let rows: Vec<ScoreRow> = raw_rows
            .iter()
            .enumerate()
            .map(|(i, raw)| {
                let scores = parse_scores(raw, &score_cols, path, i)?;
                let fold = fold_col
                    .and_then(|c| raw[c].trim().parse::<usize>().ok())
                    .unwrap_or(0);
                Ok(ScoreRow {
                    attrs: d.rows[i].clone(),
                    scores,
                    label: d.labels[i],
                    fold,
                })
            })
            .collect::<Result<_>>()?;
        return Ok(ScoreTable {
            attributes: d.attributes.clone(),
            class_names: d.class_names.clone(),
            score_kind,
            rows,
        });
    }

    // Self-contained file: need a label column; attribute types inferred the
    // same way as for CSV datasets.
    let label_col = label_col.ok_or_else(|| {
        CalibraError::InvalidData(format!(
            "{}: score file without a dataset needs a label column",
            path.display()
        ))
    })?;
    let mut numeric = vec![true; attr_cols.len()];
    for raw in &raw_rows {
        for (k, (col, _)) in attr_cols.iter().enumerate() {
            let cell = raw[*col].trim();
            if !cell.is_empty() && cell.parse::<f64>().is_err() {
                numeric[k] = false;
            }
        }
    }
    let mut attributes = Vec::new();
    let mut value_lists: Vec<Vec<String>> = Vec::new();
    for (k, (col, name)) in attr_cols.iter().enumerate() {
        if numeric[k] {
            attributes.push(Attribute::numeric(name.clone()));
            value_lists.push(Vec::new());
        } else {
            let mut values: Vec<String> = Vec::new();
            for raw in &raw_rows {
                let cell = raw[*col].trim();
                if !cell.is_empty() && !values.iter().any(|v| v == cell) {
                    values.push(cell.to_string());
                }
            }
            attributes.push(Attribute::categorical(name.clone(), values.clone()));
            value_lists.push(values);
        }
    }
    let mut class_names: Vec<String> = Vec::new();
    let mut rows = Vec::with_capacity(raw_rows.len());
    for (i, raw) in raw_rows.iter().enumerate() {
        let mut attrs = Vec::with_capacity(attr_cols.len());
        for (k, (col, _)) in attr_cols.iter().enumerate() {
            let field = raw[*col].trim();
            attrs.push(if field.is_empty() {
                Cell::Missing
            } else if numeric[k] {
                Cell::Num(field.parse().expect("checked during inference"))
            } else {
                Cell::Cat(
                    value_lists[k]
                        .iter()
                        .position(|v| v == field)
                        .expect("collected during inference"),
                )
            });
        }
        let label_name = raw[label_col].trim().to_string();
        let label = match class_names.iter().position(|c| c == &label_name) {
            Some(p) => p,
            None => {
                class_names.push(label_name);
                class_names.len() - 1
            }
        };
        let scores = parse_scores(raw, &score_cols, path, i)?;
        let fold = fold_col
            .and_then(|c| raw[c].trim().parse::<usize>().ok())
            .unwrap_or(0);
        rows.push(ScoreRow {
            attrs,
            scores,
            label,
            fold,
        });
    }
    if class_names.len() < 2 {
        return Err(CalibraError::InvalidData(format!(
            "{}: score file contains fewer than two classes",
            path.display()
        )));
    }
    Ok(ScoreTable {
        attributes,
        class_names,
        score_kind,
        rows,
    })
}

fn parse_scores(
    raw: &[String],
    score_cols: &[usize],
    path: &Path,
    row: usize,
) -> Result<Vec<f64>> {
    score_cols
        .iter()
        .map(|&c| {
            raw[c].trim().parse::<f64>().map_err(|_| CalibraError::Parse {
                path: path.display().to_string(),
                line: row + 2,
                message: format!("bad score value: {}", raw[c]),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Attribute;

    fn dataset(n: usize) -> Dataset {
        let rows: Vec<Vec<Cell>> = (0..n)
            .map(|i| vec![Cell::Num(i as f64), Cell::Cat(i % 2)])
            .collect();
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i % 2 == 0)).collect();
        Dataset::new(
            "t",
            vec![
                Attribute::numeric("x"),
                Attribute::categorical("c", vec!["a".into(), "b".into()]),
            ],
            rows,
            labels,
            vec!["neg".into(), "pos".into()],
        )
        .unwrap()
    }

    #[test]
    fn one_row_per_instance_with_fold_provenance() {
        let d = dataset(10);
        let t = collect_scores(BaseLearnerKind::NaiveBayes, &d, 3).unwrap();
        assert_eq!(t.rows.len(), 10);
        let mut seen = vec![false; 5];
        for r in &t.rows {
            assert_eq!(r.scores.len(), 2);
            seen[r.fold] = true;
        }
        assert!(seen.iter().all(|&s| s), "all folds 0..5 must appear");
    }

    #[test]
    fn deterministic_given_seed() {
        let d = dataset(20);
        let a = collect_scores(BaseLearnerKind::NaiveBayes, &d, 7).unwrap();
        let b = collect_scores(BaseLearnerKind::NaiveBayes, &d, 7).unwrap();
        assert_eq!(a, b);
        let c = collect_scores(BaseLearnerKind::NaiveBayes, &d, 8).unwrap();
        assert_ne!(a, c);
    }

    /// No-leakage check: retraining the fold-0 model reproduces fold-0 rows
    /// exactly, and a model trained on all data scores them differently.
    #[test]
    fn fold_scores_come_from_heldout_models() {
        let d = dataset(25);
        let seed = 11;
        let t = collect_scores(BaseLearnerKind::NaiveBayes, &d, seed).unwrap();
        let assignment = stratified_folds(&d, 5, seed).unwrap();
        let train = d.subset(&assignment.train_indices(0));
        let fold0_model = BaseModel::fit(BaseLearnerKind::NaiveBayes, &train).unwrap();
        let full_model = BaseModel::fit(BaseLearnerKind::NaiveBayes, &d).unwrap();
        let mut any_differs = false;
        for &i in &assignment.test_indices(0) {
            let expected = fold0_model.predict(&d.rows[i]).unwrap();
            assert_eq!(t.rows[i].scores, expected);
            if full_model.predict(&d.rows[i]).unwrap() != expected {
                any_differs = true;
            }
        }
        assert!(any_differs, "full-data model should differ somewhere");
    }

    #[test]
    fn csv_round_trip() {
        let d = dataset(12);
        let t = collect_scores(BaseLearnerKind::NaiveBayes, &d, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.csv");
        write_score_table(&t, &path).unwrap();
        let back = read_score_table(&path, None, ScoreKind::Probability).unwrap();
        assert_eq!(back.rows.len(), t.rows.len());
        for (a, b) in back.rows.iter().zip(&t.rows) {
            assert_eq!(a.scores, b.scores);
            assert_eq!(a.fold, b.fold);
            assert_eq!(a.attrs, b.attrs);
            // Class indices may be renumbered on re-inference; names must map.
            assert_eq!(back.class_names[a.label], t.class_names[b.label]);
        }
    }

    #[test]
    fn merge_with_dataset_takes_scores_only() {
        let d = dataset(8);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ext.csv");
        let mut content = String::from("score_0\n");
        for i in 0..8 {
            content.push_str(&format!("{}\n", i as f64 / 10.0));
        }
        std::fs::write(&path, content).unwrap();
        let t = read_score_table(&path, Some(&d), ScoreKind::Margin).unwrap();
        assert_eq!(t.rows.len(), 8);
        assert_eq!(t.score_kind, ScoreKind::Margin);
        assert_eq!(t.rows[3].scores, vec![0.3]);
        assert_eq!(t.rows[3].attrs, d.rows[3]);
        assert_eq!(t.rows[3].label, d.labels[3]);
    }

    #[test]
    fn row_count_mismatch_is_an_error() {
        let d = dataset(8);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ext.csv");
        std::fs::write(&path, "score_0\n0.5\n").unwrap();
        assert!(read_score_table(&path, Some(&d), ScoreKind::Margin).is_err());
    }
}
