//! Dataset representation: typed attributes, instance rows, class labels.
//!
//! Datasets are immutable after construction and safe to share across
//! concurrent fold workers. Loading, imputation, categorical encoding and
//! stratified fold generation live in the submodules.

mod arff;
mod csv_io;
mod folds;
mod preprocess;

pub use arff::load_arff;
pub use csv_io::{load_csv, write_csv};
pub use folds::{stratified_assignment, stratified_folds, FoldAssignment};
pub use preprocess::{encode_categorical, encode_row, impute_missing, numeric_rows, Imputer};

use serde::{Deserialize, Serialize};

use crate::error::{CalibraError, Result};

/// Attribute kind: numeric, or categorical with a declared value list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttrKind {
    Numeric,
    Categorical(Vec<String>),
}

/// A named, typed column of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub kind: AttrKind,
}

impl Attribute {
    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttrKind::Numeric,
        }
    }

    pub fn categorical(name: impl Into<String>, values: Vec<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttrKind::Categorical(values),
        }
    }

    pub fn num_values(&self) -> Option<usize> {
        match &self.kind {
            AttrKind::Numeric => None,
            AttrKind::Categorical(v) => Some(v.len()),
        }
    }
}

/// A single cell value. Categorical cells store the index into the
/// attribute's declared value list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Num(f64),
    Cat(usize),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_cat(&self) -> Option<usize> {
        match self {
            Cell::Cat(i) => Some(*i),
            _ => None,
        }
    }
}

/// Tabular dataset: attribute schema, instance rows, and a class label per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub rows: Vec<Vec<Cell>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset and validates its structural invariants: one cell per
    /// attribute in every row, label indices within range, at least two
    /// classes, unique attribute names, non-empty duplicate-free value lists.
    pub fn new(
        name: impl Into<String>,
        attributes: Vec<Attribute>,
        rows: Vec<Vec<Cell>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(CalibraError::InvalidData(format!(
                "dataset needs at least 2 classes, got {}",
                class_names.len()
            )));
        }
        if rows.len() != labels.len() {
            return Err(CalibraError::InvalidData(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(CalibraError::InvalidData(format!(
                    "duplicate attribute name: {}",
                    attr.name
                )));
            }
            if let AttrKind::Categorical(values) = &attr.kind {
                if values.is_empty() {
                    return Err(CalibraError::InvalidData(format!(
                        "attribute {} has an empty value list",
                        attr.name
                    )));
                }
                let mut vs = std::collections::HashSet::new();
                for v in values {
                    if !vs.insert(v.as_str()) {
                        return Err(CalibraError::InvalidData(format!(
                            "attribute {} has duplicate value {v}",
                            attr.name
                        )));
                    }
                }
            }
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != attributes.len() {
                return Err(CalibraError::InvalidData(format!(
                    "row {i} has {} cells, expected {}",
                    row.len(),
                    attributes.len()
                )));
            }
        }
        for (i, &label) in labels.iter().enumerate() {
            if label >= class_names.len() {
                return Err(CalibraError::InvalidData(format!(
                    "row {i} has label index {label} but only {} classes",
                    class_names.len()
                )));
            }
        }
        Ok(Dataset {
            name: name.into(),
            attributes,
            rows,
            labels,
            class_names,
        })
    }

    pub fn num_instances(&self) -> usize {
        self.rows.len()
    }

    pub fn num_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// True when no cell in any row is missing.
    pub fn is_complete(&self) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().all(|c| !c.is_missing()))
    }

    /// Copies the selected rows (and labels) into a new dataset sharing the schema.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            attributes: self.attributes.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// Loads a dataset from a file in the named format.
pub fn load_dataset(
    path: &std::path::Path,
    format: DataFormat,
    label_column: Option<&str>,
) -> Result<Dataset> {
    match format {
        DataFormat::Arff => load_arff(path),
        DataFormat::Csv => load_csv(path, label_column),
    }
}

/// Supported on-disk dataset formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Arff,
    Csv,
}

impl DataFormat {
    /// Infers the format from a file extension, defaulting to ARFF.
    pub fn from_path(path: &std::path::Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Arff,
        }
    }
}
