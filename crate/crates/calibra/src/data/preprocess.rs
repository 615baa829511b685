//! Missing-value imputation and categorical-to-indicator encoding.

use serde::{Deserialize, Serialize};

use crate::data::{AttrKind, Attribute, Cell, Dataset};
use crate::error::{CalibraError, Result};

/// Per-column replacement values fitted on training data. The fitted
/// statistics are frozen, so the same imputer can be applied to held-out
/// data without leaking information from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Imputer {
    replacements: Vec<Cell>,
}

impl Imputer {
    /// Fits column statistics: mean for numeric columns, most frequent value
    /// for categorical columns (ties break to the lowest value index). A
    /// fully-missing numeric column falls back to 0, a fully-missing
    /// categorical column to its first declared value.
    pub fn fit(dataset: &Dataset) -> Result<Imputer> {
        if dataset.num_instances() == 0 {
            return Err(CalibraError::InvalidData(
                "cannot fit imputation statistics on an empty dataset".into(),
            ));
        }
        let mut replacements = Vec::with_capacity(dataset.num_attributes());
        for (j, attr) in dataset.attributes.iter().enumerate() {
            let replacement = match &attr.kind {
                AttrKind::Numeric => {
                    let mut sum = 0.0;
                    let mut count = 0usize;
                    for row in &dataset.rows {
                        if let Cell::Num(v) = row[j] {
                            sum += v;
                            count += 1;
                        }
                    }
                    Cell::Num(if count == 0 { 0.0 } else { sum / count as f64 })
                }
                AttrKind::Categorical(values) => {
                    let mut counts = vec![0usize; values.len()];
                    for row in &dataset.rows {
                        if let Cell::Cat(i) = row[j] {
                            counts[i] += 1;
                        }
                    }
                    let mode = counts
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    Cell::Cat(mode)
                }
            };
            replacements.push(replacement);
        }
        Ok(Imputer { replacements })
    }

    /// Replaces every missing cell with the fitted column statistic.
    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.num_attributes() != self.replacements.len() {
            return Err(CalibraError::InvalidData(format!(
                "imputer fitted on {} attributes, dataset has {}",
                self.replacements.len(),
                dataset.num_attributes()
            )));
        }
        let rows = dataset
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, cell)| {
                        if cell.is_missing() {
                            self.replacements[j]
                        } else {
                            *cell
                        }
                    })
                    .collect()
            })
            .collect();
        Dataset::new(
            dataset.name.clone(),
            dataset.attributes.clone(),
            rows,
            dataset.labels.clone(),
            dataset.class_names.clone(),
        )
    }

    /// Replaces missing cells in a single row.
    pub fn apply_row(&self, row: &[Cell]) -> Vec<Cell> {
        row.iter()
            .enumerate()
            .map(|(j, cell)| {
                if cell.is_missing() {
                    self.replacements[j]
                } else {
                    *cell
                }
            })
            .collect()
    }
}

/// Fits imputation statistics on `dataset` and applies them to it.
pub fn impute_missing(dataset: &Dataset) -> Result<Dataset> {
    Imputer::fit(dataset)?.apply(dataset)
}

/// Converts each categorical attribute with v values into v 0/1 indicator
/// attributes in declaration order; numeric attributes pass through.
/// Requires a complete (missing-free) dataset.
pub fn encode_categorical(dataset: &Dataset) -> Result<Dataset> {
    if !dataset.is_complete() {
        return Err(CalibraError::InvalidData(
            "encode_categorical requires missing values to be imputed first".into(),
        ));
    }
    let mut attributes: Vec<Attribute> = Vec::new();
    for attr in &dataset.attributes {
        match &attr.kind {
            AttrKind::Numeric => attributes.push(attr.clone()),
            AttrKind::Categorical(values) => {
                for v in values {
                    attributes.push(Attribute::numeric(format!("{}={}", attr.name, v)));
                }
            }
        }
    }
    let rows = dataset
        .rows
        .iter()
        .map(|row| {
            let mut out = Vec::with_capacity(attributes.len());
            for (cell, attr) in row.iter().zip(&dataset.attributes) {
                match (&attr.kind, cell) {
                    (AttrKind::Numeric, Cell::Num(v)) => out.push(Cell::Num(*v)),
                    (AttrKind::Categorical(values), Cell::Cat(i)) => {
                        for k in 0..values.len() {
                            out.push(Cell::Num(if k == *i { 1.0 } else { 0.0 }));
                        }
                    }
                    _ => unreachable!("validated complete and typed"),
                }
            }
            out
        })
        .collect();
    Dataset::new(
        dataset.name.clone(),
        attributes,
        rows,
        dataset.labels.clone(),
        dataset.class_names.clone(),
    )
}

/// Indicator encoding of a single typed row against its schema.
pub fn encode_row(attributes: &[Attribute], row: &[Cell]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (cell, attr) in row.iter().zip(attributes) {
        match (&attr.kind, cell) {
            (AttrKind::Numeric, Cell::Num(v)) => out.push(*v),
            (AttrKind::Categorical(values), Cell::Cat(i)) if *i < values.len() => {
                for k in 0..values.len() {
                    out.push(if k == *i { 1.0 } else { 0.0 });
                }
            }
            _ => {
                return Err(CalibraError::InvalidData(format!(
                    "cell does not match attribute {} (missing values must be imputed)",
                    attr.name
                )));
            }
        }
    }
    Ok(out)
}

/// Numeric feature rows for an encoded (all-numeric) dataset.
pub fn numeric_rows(dataset: &Dataset) -> Result<Vec<Vec<f64>>> {
    dataset
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| {
                    c.as_num().ok_or_else(|| {
                        CalibraError::InvalidData("expected an all-numeric dataset".into())
                    })
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_classes() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn numeric_missing_becomes_mean() {
        let d = Dataset::new(
            "t",
            vec![Attribute::numeric("x")],
            vec![
                vec![Cell::Num(1.0)],
                vec![Cell::Missing],
                vec![Cell::Num(3.0)],
            ],
            vec![0, 1, 0],
            two_classes(),
        )
        .unwrap();
        let imputed = impute_missing(&d).unwrap();
        assert_eq!(imputed.rows[1][0], Cell::Num(2.0));
    }

    #[test]
    fn categorical_missing_becomes_mode() {
        let d = Dataset::new(
            "t",
            vec![Attribute::categorical("c", vec!["a".into(), "b".into()])],
            vec![
                vec![Cell::Cat(0)],
                vec![Cell::Cat(0)],
                vec![Cell::Cat(1)],
                vec![Cell::Missing],
            ],
            vec![0, 0, 1, 1],
            two_classes(),
        )
        .unwrap();
        let imputed = impute_missing(&d).unwrap();
        assert_eq!(imputed.rows[3][0], Cell::Cat(0));
    }

    #[test]
    fn mode_tie_breaks_to_lowest_index() {
        let d = Dataset::new(
            "t",
            vec![Attribute::categorical(
                "c",
                vec!["a".into(), "b".into(), "c".into()],
            )],
            vec![
                vec![Cell::Cat(2)],
                vec![Cell::Cat(1)],
                vec![Cell::Missing],
            ],
            vec![0, 1, 0],
            two_classes(),
        )
        .unwrap();
        let imputed = impute_missing(&d).unwrap();
        assert_eq!(imputed.rows[2][0], Cell::Cat(1));
    }

    #[test]
    fn fully_missing_numeric_column_becomes_zero() {
        let d = Dataset::new(
            "t",
            vec![Attribute::numeric("x")],
            vec![vec![Cell::Missing], vec![Cell::Missing]],
            vec![0, 1],
            two_classes(),
        )
        .unwrap();
        let imputed = impute_missing(&d).unwrap();
        assert_eq!(imputed.rows[0][0], Cell::Num(0.0));
        assert_eq!(imputed.rows[1][0], Cell::Num(0.0));
    }

    #[test]
    fn imputation_is_idempotent_with_fitted_stats() {
        let d = Dataset::new(
            "t",
            vec![Attribute::numeric("x")],
            vec![
                vec![Cell::Num(1.0)],
                vec![Cell::Missing],
                vec![Cell::Num(5.0)],
            ],
            vec![0, 1, 0],
            two_classes(),
        )
        .unwrap();
        let imputer = Imputer::fit(&d).unwrap();
        let once = imputer.apply(&d).unwrap();
        let twice = imputer.apply(&once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn encoding_expands_in_declaration_order() {
        let d = Dataset::new(
            "t",
            vec![
                Attribute::categorical("c", vec!["a".into(), "b".into(), "c".into()]),
                Attribute::numeric("x"),
            ],
            vec![vec![Cell::Cat(1), Cell::Num(7.0)]],
            vec![0],
            two_classes(),
        )
        .unwrap();
        let e = encode_categorical(&d).unwrap();
        assert_eq!(e.num_attributes(), 4);
        assert_eq!(
            e.rows[0],
            vec![Cell::Num(0.0), Cell::Num(1.0), Cell::Num(0.0), Cell::Num(7.0)]
        );
        assert_eq!(e.attributes[0].name, "c=a");
    }

    #[test]
    fn all_numeric_dataset_unchanged() {
        let d = Dataset::new(
            "t",
            vec![Attribute::numeric("x")],
            vec![vec![Cell::Num(1.0)]],
            vec![0],
            two_classes(),
        )
        .unwrap();
        let e = encode_categorical(&d).unwrap();
        assert_eq!(e.rows, d.rows);
        assert_eq!(e.attributes, d.attributes);
    }

    #[test]
    fn indicator_rows_sum_to_one_per_source_attribute() {
        let d = Dataset::new(
            "t",
            vec![
                Attribute::categorical("p", vec!["a".into(), "b".into()]),
                Attribute::categorical("q", vec!["x".into(), "y".into(), "z".into()]),
            ],
            vec![
                vec![Cell::Cat(0), Cell::Cat(2)],
                vec![Cell::Cat(1), Cell::Cat(0)],
            ],
            vec![0, 1],
            two_classes(),
        )
        .unwrap();
        let e = encode_categorical(&d).unwrap();
        assert_eq!(e.num_attributes(), 5);
        for row in &e.rows {
            let first: f64 = row[..2].iter().map(|c| c.as_num().unwrap()).sum();
            let second: f64 = row[2..].iter().map(|c| c.as_num().unwrap()).sum();
            assert_eq!(first, 1.0);
            assert_eq!(second, 1.0);
        }
    }
}
