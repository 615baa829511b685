//! CSV dataset reader/writer (RFC 4180 via the `csv` crate).
//!
//! A header row is required. The label column is selected by name; every
//! other column becomes an attribute. A column is numeric iff all of its
//! non-missing cells parse as numbers, otherwise categorical with values in
//! first-appearance order. Empty cells are missing.

use std::path::Path;

use crate::data::{AttrKind, Attribute, Cell, Dataset};
use crate::error::{CalibraError, Result};

pub fn load_csv(path: &Path, label_column: Option<&str>) -> Result<Dataset> {
    let label_column = label_column.ok_or_else(|| {
        CalibraError::InvalidArgument("CSV loading requires a label column name".into())
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            CalibraError::InvalidArgument(format!("label column {label_column} not in header"))
        })?;

    let mut raw_rows: Vec<Vec<String>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CalibraError::Parse {
            path: path.display().to_string(),
            line: i + 2,
            message: e.to_string(),
        })?;
        raw_rows.push(record.iter().map(|f| f.to_string()).collect());
    }

    let attr_indices: Vec<usize> = (0..headers.len()).filter(|&j| j != label_idx).collect();

    // Type inference: numeric iff every non-missing cell parses as a number.
    let mut numeric: Vec<bool> = vec![true; attr_indices.len()];
    for row in &raw_rows {
        for (k, &j) in attr_indices.iter().enumerate() {
            let cell = row[j].trim();
            if !cell.is_empty() && cell.parse::<f64>().is_err() {
                numeric[k] = false;
            }
        }
    }

    let mut attributes: Vec<Attribute> = Vec::new();
    let mut value_lists: Vec<Vec<String>> = Vec::new();
    for (k, &j) in attr_indices.iter().enumerate() {
        if numeric[k] {
            attributes.push(Attribute::numeric(headers[j].clone()));
            value_lists.push(Vec::new());
        } else {
            let mut values: Vec<String> = Vec::new();
            for row in &raw_rows {
                let cell = row[j].trim();
                if !cell.is_empty() && !values.iter().any(|v| v == cell) {
                    values.push(cell.to_string());
                }
            }
            if values.is_empty() {
                // Entirely-missing column: give it a placeholder value.
                values.push(String::from("?value"));
            }
            attributes.push(Attribute::categorical(headers[j].clone(), values.clone()));
            value_lists.push(values);
        }
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut rows = Vec::with_capacity(raw_rows.len());
    let mut labels = Vec::with_capacity(raw_rows.len());
    for (i, row) in raw_rows.iter().enumerate() {
        let mut cells = Vec::with_capacity(attr_indices.len());
        for (k, &j) in attr_indices.iter().enumerate() {
            let field = row[j].trim();
            let cell = if field.is_empty() {
                Cell::Missing
            } else if numeric[k] {
                Cell::Num(field.parse::<f64>().expect("checked during inference"))
            } else {
                let pos = value_lists[k]
                    .iter()
                    .position(|v| v == field)
                    .expect("collected during inference");
                Cell::Cat(pos)
            };
            cells.push(cell);
        }
        let label_field = row[label_idx].trim();
        if label_field.is_empty() {
            return Err(CalibraError::Parse {
                path: path.display().to_string(),
                line: i + 2,
                message: "missing class label".into(),
            });
        }
        let label = match class_names.iter().position(|c| c == label_field) {
            Some(p) => p,
            None => {
                class_names.push(label_field.to_string());
                class_names.len() - 1
            }
        };
        rows.push(cells);
        labels.push(label);
    }

    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    Dataset::new(name, attributes, rows, labels, class_names)
}

/// Writes a dataset as CSV with the class in a trailing column.
///
/// Numeric cells use the shortest representation that round-trips exactly,
/// so load(write(d)) reproduces cell values bit for bit.
pub fn write_csv(dataset: &Dataset, path: &Path, label_column: &str) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = dataset.attributes.iter().map(|a| a.name.clone()).collect();
    header.push(label_column.to_string());
    writer.write_record(&header)?;
    for (row, &label) in dataset.rows.iter().zip(&dataset.labels) {
        let mut record: Vec<String> = Vec::with_capacity(row.len() + 1);
        for (cell, attr) in row.iter().zip(&dataset.attributes) {
            record.push(match (cell, &attr.kind) {
                (Cell::Missing, _) => String::new(),
                (Cell::Num(v), _) => format_num(*v),
                (Cell::Cat(i), AttrKind::Categorical(values)) => values[*i].clone(),
                (Cell::Cat(i), AttrKind::Numeric) => i.to_string(),
            });
        }
        record.push(dataset.class_names[label].clone());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn format_num(v: f64) -> String {
    // Rust's Display for f64 is the shortest string that parses back exactly.
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, content).unwrap();
        p
    }

    #[test]
    fn infers_types_and_missing() {
        let dir = tempdir().unwrap();
        let p = write_file(
            dir.path(),
            "d.csv",
            "a,b,class\n1.5,red,x\n,blue,y\n2.5,red,x\n",
        );
        let d = load_csv(&p, Some("class")).unwrap();
        assert_eq!(d.attributes[0].kind, AttrKind::Numeric);
        assert!(matches!(d.attributes[1].kind, AttrKind::Categorical(_)));
        assert!(d.rows[1][0].is_missing());
        assert_eq!(d.class_names, vec!["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn mixed_column_is_categorical() {
        let dir = tempdir().unwrap();
        let p = write_file(dir.path(), "d.csv", "a,class\n1.5,x\nfoo,y\n");
        let d = load_csv(&p, Some("class")).unwrap();
        assert!(matches!(d.attributes[0].kind, AttrKind::Categorical(_)));
    }

    #[test]
    fn missing_label_column_is_an_error() {
        let dir = tempdir().unwrap();
        let p = write_file(dir.path(), "d.csv", "a,b\n1,2\n");
        assert!(load_csv(&p, Some("class")).is_err());
        assert!(load_csv(&p, None).is_err());
    }

    #[test]
    fn round_trip_preserves_cells_exactly() {
        let dir = tempdir().unwrap();
        let p = write_file(
            dir.path(),
            "d.csv",
            "a,b,class\n0.1,red,x\n1e-300,blue,y\n,red,x\n0.30000000000000004,blue,y\n",
        );
        let d = load_csv(&p, Some("class")).unwrap();
        let out = dir.path().join("out.csv");
        write_csv(&d, &out, "class").unwrap();
        let d2 = load_csv(&out, Some("class")).unwrap();
        assert_eq!(d.rows, d2.rows);
        assert_eq!(d.labels, d2.labels);
    }
}
