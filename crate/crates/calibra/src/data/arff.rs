//! Minimal ARFF reader.
//!
//! Supports the subset used by the UCI classification files: `@relation`,
//! `@attribute name numeric` (also `real`/`integer`), `@attribute name
//! {v1,...}`, `@data`, `?` for missing values, `%` comments, and optional
//! single quotes around names and values. Keywords are case-insensitive.
//! The last attribute is taken as the class.

use std::path::Path;

use crate::data::{AttrKind, Attribute, Cell, Dataset};
use crate::error::{CalibraError, Result};

pub fn load_arff(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    parse_arff(&text, &path_str)
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> CalibraError {
    CalibraError::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn unquote(s: &str) -> String {
    let s = s.trim();
    if s.len() >= 2 && (s.starts_with('\'') && s.ends_with('\'') || s.starts_with('"') && s.ends_with('"')) {
        s[1..s.len() - 1].to_string()
    } else {
        s.to_string()
    }
}

/// Splits a line on commas that are outside quotes.
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut in_quote: Option<char> = None;
    for ch in line.chars() {
        match in_quote {
            Some(q) => {
                cur.push(ch);
                if ch == q {
                    in_quote = None;
                }
            }
            None => match ch {
                '\'' | '"' => {
                    cur.push(ch);
                    in_quote = Some(ch);
                }
                ',' => {
                    fields.push(cur.clone());
                    cur.clear();
                }
                _ => cur.push(ch),
            },
        }
    }
    fields.push(cur);
    fields
}

fn parse_arff(text: &str, path: &str) -> Result<Dataset> {
    let mut relation = String::from("dataset");
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut in_data = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@relation") {
                relation = unquote(line["@relation".len()..].trim());
            } else if lower.starts_with("@attribute") {
                let rest = line["@attribute".len()..].trim();
                attributes.push(parse_attribute(rest, path, lineno)?);
            } else if lower.starts_with("@data") {
                if attributes.len() < 2 {
                    return Err(parse_err(
                        path,
                        lineno,
                        "need at least one attribute plus a class attribute before @data",
                    ));
                }
                in_data = true;
            } else {
                return Err(parse_err(path, lineno, format!("unrecognized header line: {line}")));
            }
            continue;
        }

        let fields = split_csv_line(line);
        if fields.len() != attributes.len() {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {} values, found {}", attributes.len(), fields.len()),
            ));
        }
        let mut row = Vec::with_capacity(attributes.len() - 1);
        let mut label = None;
        for (j, (field, attr)) in fields.iter().zip(&attributes).enumerate() {
            let value = unquote(field);
            let is_class = j + 1 == attributes.len();
            if value == "?" {
                if is_class {
                    return Err(parse_err(path, lineno, "missing class label"));
                }
                row.push(Cell::Missing);
                continue;
            }
            let cell = match &attr.kind {
                AttrKind::Numeric => {
                    let v: f64 = value.parse().map_err(|_| {
                        parse_err(path, lineno, format!("not a number for {}: {value}", attr.name))
                    })?;
                    Cell::Num(v)
                }
                AttrKind::Categorical(values) => {
                    let pos = values.iter().position(|v| v == &value).ok_or_else(|| {
                        parse_err(
                            path,
                            lineno,
                            format!("undeclared value for {}: {value}", attr.name),
                        )
                    })?;
                    Cell::Cat(pos)
                }
            };
            if is_class {
                label = cell.as_cat();
            } else {
                row.push(cell);
            }
        }
        let label = label
            .ok_or_else(|| parse_err(path, lineno, "class attribute must be categorical"))?;
        rows.push(row);
        labels.push(label);
    }

    if !in_data {
        return Err(parse_err(path, 0, "no @data section"));
    }
    let class_attr = attributes.pop().expect("validated above");
    let class_names = match class_attr.kind {
        AttrKind::Categorical(values) => values,
        AttrKind::Numeric => {
            return Err(parse_err(path, 0, "class attribute must be categorical"));
        }
    };
    Dataset::new(relation, attributes, rows, labels, class_names)
}

fn parse_attribute(rest: &str, path: &str, lineno: usize) -> Result<Attribute> {
    // Either: name {v1, v2, ...}  or: name numeric|real|integer
    let rest = rest.trim();
    if let Some(brace) = rest.find('{') {
        let name = unquote(rest[..brace].trim());
        let close = rest
            .rfind('}')
            .ok_or_else(|| parse_err(path, lineno, "unterminated value list"))?;
        let values: Vec<String> = split_csv_line(&rest[brace + 1..close])
            .iter()
            .map(|v| unquote(v))
            .collect();
        if values.is_empty() || values.iter().any(|v| v.is_empty()) {
            return Err(parse_err(path, lineno, "empty value in categorical list"));
        }
        Ok(Attribute::categorical(name, values))
    } else {
        // Name may be quoted and contain spaces; the kind is the last token.
        let (name_part, kind_part) = match rest.rfind(char::is_whitespace) {
            Some(pos) => (&rest[..pos], &rest[pos + 1..]),
            None => {
                return Err(parse_err(path, lineno, format!("malformed attribute: {rest}")));
            }
        };
        let kind = kind_part.to_ascii_lowercase();
        match kind.as_str() {
            "numeric" | "real" | "integer" => Ok(Attribute::numeric(unquote(name_part))),
            other => Err(parse_err(
                path,
                lineno,
                format!("unsupported attribute type: {other}"),
            )),
        }
    }
}
