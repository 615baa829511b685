//! Model persistence: a versioned JSON envelope around fitted calibrators.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::base::ScoreTable;
use crate::calibrators::{IsotonicCalibrator, PlattCalibrator, ScoreKind};
use crate::data::Cell;
use crate::error::{CalibraError, Result};
use crate::pct::{fit_pct, CalibrationTree, PctConfig, PruningRecord};

pub const FORMAT_VERSION: u32 = 1;

/// Calibration method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Pct,
    Platt,
    Isotonic,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "pct" => Ok(Method::Pct),
            "platt" | "ps" => Ok(Method::Platt),
            "isotonic" | "ir" => Ok(Method::Isotonic),
            other => Err(CalibraError::InvalidArgument(format!(
                "unknown method: {other} (expected pct, platt or isotonic)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Pct => "pct",
            Method::Platt => "platt",
            Method::Isotonic => "isotonic",
        }
    }
}

/// Any fitted calibrator, with a uniform calibration interface over raw
/// base-model scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FittedCalibrator {
    Pct(CalibrationTree),
    Platt(PlattCalibrator),
    Isotonic(IsotonicCalibrator),
}

impl FittedCalibrator {
    /// Fits the selected method on a score table.
    pub fn fit(method: Method, table: &ScoreTable, seed: u64) -> Result<FittedCalibrator> {
        match method {
            Method::Pct => {
                let records = table.to_records()?;
                let config = PctConfig {
                    seed,
                    ..PctConfig::default()
                };
                let (tree, _) = fit_pct(
                    &records,
                    &table.attributes,
                    &table.class_names,
                    table.score_kind,
                    &config,
                )?;
                Ok(FittedCalibrator::Pct(tree))
            }
            Method::Platt => Ok(FittedCalibrator::Platt(PlattCalibrator::fit(
                &table.raw_score_rows(),
                &table.labels(),
                table.class_names.len(),
                table.score_kind,
            )?)),
            Method::Isotonic => Ok(FittedCalibrator::Isotonic(IsotonicCalibrator::fit(
                &table.raw_score_rows(),
                &table.labels(),
                table.class_names.len(),
                table.score_kind,
            )?)),
        }
    }

    /// Like [`FittedCalibrator::fit`] for trees, but also returns the
    /// pruning record.
    pub fn fit_pct_with_record(
        table: &ScoreTable,
        seed: u64,
    ) -> Result<(FittedCalibrator, PruningRecord)> {
        let records = table.to_records()?;
        let config = PctConfig {
            seed,
            ..PctConfig::default()
        };
        let (tree, record) = fit_pct(
            &records,
            &table.attributes,
            &table.class_names,
            table.score_kind,
            &config,
        )?;
        Ok((FittedCalibrator::Pct(tree), record))
    }

    /// Calibrated class distribution for one instance given its original
    /// attributes and raw base-model scores.
    pub fn calibrate(&self, attrs: &[Cell], raw_scores: &[f64]) -> Result<Vec<f64>> {
        match self {
            FittedCalibrator::Pct(tree) => tree.calibrate(attrs, raw_scores),
            FittedCalibrator::Platt(p) => p.calibrate(raw_scores),
            FittedCalibrator::Isotonic(i) => i.calibrate(raw_scores),
        }
    }

    pub fn method(&self) -> Method {
        match self {
            FittedCalibrator::Pct(_) => Method::Pct,
            FittedCalibrator::Platt(_) => Method::Platt,
            FittedCalibrator::Isotonic(_) => Method::Isotonic,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            FittedCalibrator::Pct(t) => t.num_classes(),
            FittedCalibrator::Platt(p) => p.num_classes,
            FittedCalibrator::Isotonic(i) => i.num_classes,
        }
    }

    pub fn score_kind(&self) -> ScoreKind {
        match self {
            FittedCalibrator::Pct(t) => t.score_kind,
            FittedCalibrator::Platt(p) => p.score_kind,
            FittedCalibrator::Isotonic(i) => i.score_kind,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    kind: String,
    model: serde_json::Value,
}

/// Writes a calibrator as versioned JSON.
pub fn save_model(calibrator: &FittedCalibrator, path: &Path) -> Result<()> {
    let envelope = Envelope {
        format_version: FORMAT_VERSION,
        kind: calibrator.method().name().to_string(),
        model: serde_json::to_value(calibrator)?,
    };
    let json = serde_json::to_string_pretty(&envelope)?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Reads a calibrator written by [`save_model`], checking the format version.
pub fn load_model(path: &Path) -> Result<FittedCalibrator> {
    let text = std::fs::read_to_string(path)?;
    let envelope: Envelope = serde_json::from_str(&text)?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(CalibraError::ModelFormat(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            envelope.format_version
        )));
    }
    let calibrator: FittedCalibrator = serde_json::from_value(envelope.model)?;
    Ok(calibrator)
}
