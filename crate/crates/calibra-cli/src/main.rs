//! calibra: fit, apply and benchmark probability calibration models.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use calibra::base::{collect_scores, read_score_table, write_score_table, BaseLearnerKind};
use calibra::calibrators::ScoreKind;
use calibra::data::{load_dataset, AttrKind, Cell, DataFormat, Dataset, Imputer};
use calibra::derive_seed;
use calibra::eval::{
    format_report_table, reliability_report, rmse, run_benchmark, write_reliability_csv,
    write_report_csv, BenchmarkConfig,
};
use calibra::serialize::{load_model, save_model, FittedCalibrator, Method};

#[derive(Parser)]
#[command(
    name = "calibra",
    version,
    about = "Probability calibration: calibration trees, Platt scaling, isotonic regression"
)]
struct Cli {
    /// Master random seed; all internal randomness derives from it.
    #[arg(long, global = true, env = "CALIBRA_SEED", default_value_t = 1)]
    seed: u64,

    /// Worker threads for cross-validation folds (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a calibration model on a dataset (internal 5-fold score
    /// collection) or on an external score file.
    Fit {
        /// Calibration method: pct, platt or isotonic.
        #[arg(long)]
        method: String,
        /// Base learner: nb, stumps or trees. Not needed with --scores.
        #[arg(long)]
        base: Option<String>,
        /// Training data (.arff or .csv).
        #[arg(long)]
        data: PathBuf,
        /// Label column name (CSV datasets).
        #[arg(long)]
        label_column: Option<String>,
        /// External score file (ScoreTable CSV) aligned with --data rows.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// How to interpret external scores: margin (no transform) or
        /// probability (log-odds transformed for pct/platt).
        #[arg(long, default_value = "margin")]
        score_kind: String,
        /// Output model file (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Also write the collected ScoreTable as CSV.
        #[arg(long)]
        export_scores: Option<PathBuf>,
    },
    /// Apply a fitted model to instances with precomputed scores.
    Calibrate {
        /// Model file written by `fit`.
        #[arg(long)]
        model: PathBuf,
        /// Score file (ScoreTable CSV: score_* columns, optionally attr_*
        /// columns and label).
        #[arg(long)]
        scores: PathBuf,
        /// Optional dataset supplying original attributes and labels,
        /// row-aligned with the score file.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Label column name (CSV datasets).
        #[arg(long)]
        label_column: Option<String>,
        /// How to interpret the score columns.
        #[arg(long, default_value = "margin")]
        score_kind: String,
        /// Output CSV of calibrated probabilities (one row per instance).
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeated stratified cross-validation benchmark over datasets.
    Benchmark {
        /// Base learner: nb, stumps or trees.
        #[arg(long)]
        base: String,
        /// Comma-separated methods, e.g. pct,platt,isotonic.
        #[arg(long, default_value = "pct,platt,isotonic")]
        methods: String,
        /// Dataset files.
        #[arg(long, required = true, num_args = 1..)]
        data: Vec<PathBuf>,
        /// Label column name (CSV datasets).
        #[arg(long)]
        label_column: Option<String>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Significance level for the corrected resampled t-test marks.
        #[arg(long, default_value_t = 0.01)]
        significance: f64,
        /// Report CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export reliability-diagram CSVs (raw plus one per method) and a
    /// plot script.
    Reliability {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        label_column: Option<String>,
        /// Base learner: nb, stumps or trees.
        #[arg(long)]
        base: String,
        #[arg(long, default_value = "pct,platt,isotonic")]
        methods: String,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 30)]
        max_bins: usize,
        /// Positive class name (required for multiclass data; binary data
        /// defaults to the second class).
        #[arg(long)]
        positive_class: Option<String>,
        /// Directory for the CSVs and plot script.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

enum AppError {
    Validation(String),
    Runtime(String),
}

impl From<calibra::CalibraError> for AppError {
    fn from(e: calibra::CalibraError) -> Self {
        AppError::Runtime(e.to_string())
    }
}

fn validation(msg: impl Into<String>) -> AppError {
    AppError::Validation(msg.into())
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // Worker count only affects scheduling; results are keyed and
        // reduced in canonical order, so output is identical for any value.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    let code = match run(cli) {
        Ok(()) => 0,
        Err(AppError::Validation(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    };
    std::process::exit(code);
}

fn require_file(path: &Path, what: &str) -> Result<(), AppError> {
    if !path.is_file() {
        return Err(validation(format!(
            "{what} not found: {}",
            path.display()
        )));
    }
    Ok(())
}

fn load_data(path: &Path, label_column: Option<&str>) -> Result<Dataset, AppError> {
    require_file(path, "data file")?;
    let format = DataFormat::from_path(path);
    load_dataset(path, format, label_column)
        .map_err(|e| validation(format!("cannot load {}: {e}", path.display())))
}

fn parse_score_kind(s: &str) -> Result<ScoreKind, AppError> {
    match s {
        "margin" => Ok(ScoreKind::Margin),
        "probability" => Ok(ScoreKind::Probability),
        other => Err(validation(format!(
            "unknown score kind: {other} (expected margin or probability)"
        ))),
    }
}

fn parse_methods(s: &str) -> Result<Vec<Method>, AppError> {
    s.split(',')
        .map(|m| Method::parse(m.trim()).map_err(|e| validation(e.to_string())))
        .collect()
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Fit {
            method,
            base,
            data,
            label_column,
            scores,
            score_kind,
            out,
            export_scores,
        } => cmd_fit(
            &method,
            base.as_deref(),
            &data,
            label_column.as_deref(),
            scores.as_deref(),
            &score_kind,
            &out,
            export_scores.as_deref(),
            cli.seed,
        ),
        Command::Calibrate {
            model,
            scores,
            data,
            label_column,
            score_kind,
            out,
        } => cmd_calibrate(
            &model,
            &scores,
            data.as_deref(),
            label_column.as_deref(),
            &score_kind,
            &out,
        ),
        Command::Benchmark {
            base,
            methods,
            data,
            label_column,
            runs,
            folds,
            significance,
            out,
        } => cmd_benchmark(
            &base,
            &methods,
            &data,
            label_column.as_deref(),
            runs,
            folds,
            significance,
            out.as_deref(),
            cli.seed,
        ),
        Command::Reliability {
            data,
            label_column,
            base,
            methods,
            folds,
            max_bins,
            positive_class,
            out_dir,
        } => cmd_reliability(
            &data,
            label_column.as_deref(),
            &base,
            &methods,
            folds,
            max_bins,
            positive_class.as_deref(),
            &out_dir,
            cli.seed,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    method: &str,
    base: Option<&str>,
    data: &Path,
    label_column: Option<&str>,
    scores: Option<&Path>,
    score_kind: &str,
    out: &Path,
    export_scores: Option<&Path>,
    seed: u64,
) -> Result<(), AppError> {
    let method = Method::parse(method).map_err(|e| validation(e.to_string()))?;
    if scores.is_none() && base.is_none() {
        return Err(validation(
            "fit needs either --base (built-in learner) or --scores (external score file)",
        ));
    }
    let dataset = load_data(data, label_column)?;
    let imputer = Imputer::fit(&dataset)?;
    let imputed = imputer.apply(&dataset)?;

    let table = match scores {
        Some(path) => {
            require_file(path, "score file")?;
            let kind = parse_score_kind(score_kind)?;
            read_score_table(path, Some(&imputed), kind)
                .map_err(|e| validation(format!("cannot read scores: {e}")))?
        }
        None => {
            let base = BaseLearnerKind::parse(base.expect("checked above"))
                .map_err(|e| validation(e.to_string()))?;
            collect_scores(base, &imputed, derive_seed(seed, "fit-internal"))?
        }
    };
    if let Some(path) = export_scores {
        write_score_table(&table, path)?;
    }

    let calibrator = FittedCalibrator::fit(method, &table, derive_seed(seed, "fit-model"))?;
    save_model(&calibrator, out)?;

    let mut probs = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        probs.push(calibrator.calibrate(&row.attrs, &row.scores)?);
    }
    let train_rmse = rmse(&probs, &table.labels())?;
    println!(
        "fitted {} on {} rows ({} classes); training RMSE {train_rmse:.6}",
        method.name(),
        table.rows.len(),
        table.class_names.len()
    );
    println!("model written to {}", out.display());
    Ok(())
}

/// Re-keys a typed row from one schema onto a model's schema by attribute
/// name and value string. Unknown attributes and unseen categorical values
/// become Missing, which the tree routes through majority branches.
fn remap_row(
    from_schema: &[calibra::data::Attribute],
    row: &[Cell],
    to_schema: &[calibra::data::Attribute],
) -> Vec<Cell> {
    to_schema
        .iter()
        .map(|target| {
            let Some(j) = from_schema.iter().position(|a| a.name == target.name) else {
                return Cell::Missing;
            };
            match (&from_schema[j].kind, &target.kind, row[j]) {
                (AttrKind::Numeric, AttrKind::Numeric, cell @ Cell::Num(_)) => cell,
                (AttrKind::Categorical(from_vals), AttrKind::Categorical(to_vals), Cell::Cat(i)) => {
                    match to_vals.iter().position(|v| Some(v) == from_vals.get(i)) {
                        Some(k) => Cell::Cat(k),
                        None => Cell::Missing,
                    }
                }
                _ => Cell::Missing,
            }
        })
        .collect()
}

fn cmd_calibrate(
    model_path: &Path,
    scores: &Path,
    data: Option<&Path>,
    label_column: Option<&str>,
    score_kind: &str,
    out: &Path,
) -> Result<(), AppError> {
    require_file(model_path, "model file")?;
    require_file(scores, "score file")?;
    let calibrator =
        load_model(model_path).map_err(|e| validation(format!("cannot load model: {e}")))?;
    let kind = parse_score_kind(score_kind)?;

    let dataset = match data {
        Some(path) => Some(load_data(path, label_column)?),
        None => None,
    };
    let table = read_score_table(scores, dataset.as_ref(), kind)
        .map_err(|e| validation(format!("cannot read scores: {e}")))?;

    // For tree models, instance attributes are re-keyed onto the model's
    // schema so categorical indices line up.
    let model_schema = match &calibrator {
        FittedCalibrator::Pct(tree) => Some(tree.schema.clone()),
        _ => None,
    };

    let mut writer = csv::Writer::from_path(out).map_err(calibra::CalibraError::from)?;
    let m = calibrator.num_classes();
    let header: Vec<String> = (0..m).map(|j| format!("prob_{j}")).collect();
    writer
        .write_record(&header)
        .map_err(calibra::CalibraError::from)?;
    for (i, row) in table.rows.iter().enumerate() {
        let attrs = match &model_schema {
            Some(schema) => remap_row(&table.attributes, &row.attrs, schema),
            None => row.attrs.clone(),
        };
        let probs = calibrator.calibrate(&attrs, &row.scores).map_err(|e| {
            if i == 0 {
                validation(format!("score file does not match the model: {e}"))
            } else {
                AppError::Runtime(e.to_string())
            }
        })?;
        let record: Vec<String> = probs.iter().map(|p| format!("{p}")).collect();
        writer
            .write_record(&record)
            .map_err(calibra::CalibraError::from)?;
    }
    writer.flush().map_err(calibra::CalibraError::from)?;
    println!(
        "calibrated {} instances -> {}",
        table.rows.len(),
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_benchmark(
    base: &str,
    methods: &str,
    data: &[PathBuf],
    label_column: Option<&str>,
    runs: usize,
    folds: usize,
    significance: f64,
    out: Option<&Path>,
    seed: u64,
) -> Result<(), AppError> {
    let base = BaseLearnerKind::parse(base).map_err(|e| validation(e.to_string()))?;
    let methods = parse_methods(methods)?;
    if methods.is_empty() {
        return Err(validation("no methods selected"));
    }
    let datasets: Vec<Dataset> = data
        .iter()
        .map(|p| load_data(p, label_column))
        .collect::<Result<_, _>>()?;

    let mut config = BenchmarkConfig::new(base, methods);
    config.runs = runs;
    config.folds = folds;
    config.seed = seed;
    config.significance = significance;
    let report = run_benchmark(&datasets, &config);

    print!("{}", format_report_table(&report));
    if let Some(path) = out {
        write_report_csv(&report, path)?;
        println!("report written to {}", path.display());
    }
    for d in &report.datasets {
        if let Some(err) = &d.error {
            eprintln!("dataset {} failed: {err}", d.dataset);
        }
    }
    if report.datasets.iter().all(|d| d.error.is_some()) {
        return Err(AppError::Runtime("all datasets failed".into()));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_reliability(
    data: &Path,
    label_column: Option<&str>,
    base: &str,
    methods: &str,
    folds: usize,
    max_bins: usize,
    positive_class: Option<&str>,
    out_dir: &Path,
    seed: u64,
) -> Result<(), AppError> {
    let base = BaseLearnerKind::parse(base).map_err(|e| validation(e.to_string()))?;
    let methods = parse_methods(methods)?;
    let dataset = load_data(data, label_column)?;
    let positive = match positive_class {
        Some(name) => dataset
            .class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| validation(format!("class {name} not in dataset")))?,
        None => {
            if dataset.num_classes() != 2 {
                return Err(validation(
                    "multiclass data needs --positive-class for reliability diagrams",
                ));
            }
            1
        }
    };
    std::fs::create_dir_all(out_dir).map_err(calibra::CalibraError::from)?;

    let curves = reliability_report(
        &dataset, base, &methods, folds, seed, positive, max_bins,
    )?;
    let mut names = Vec::new();
    for (name, bins) in &curves {
        let path = out_dir.join(format!("reliability_{name}.csv"));
        write_reliability_csv(bins, &path)?;
        println!(
            "{name}: {} bins, mean |pred - empirical| = {:.4} -> {}",
            bins.bins.len(),
            bins.mean_abs_deviation(),
            path.display()
        );
        names.push(name.clone());
    }
    let plot = plot_script(&names);
    let plot_path = out_dir.join("plot_reliability.py");
    std::fs::write(&plot_path, plot).map_err(calibra::CalibraError::from)?;
    println!("plot script written to {}", plot_path.display());
    Ok(())
}

fn plot_script(names: &[String]) -> String {
    let list = names
        .iter()
        .map(|n| format!("\"{n}\""))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        r#"#!/usr/bin/env python3
"""Reliability diagrams: one panel per calibration method."""
import csv
import os.path
import matplotlib.pyplot as plt

names = [{list}]
fig, axes = plt.subplots(1, len(names), figsize=(4 * len(names), 4), squeeze=False)
here = os.path.dirname(os.path.abspath(__file__))
for ax, name in zip(axes[0], names):
    xs, ys = [], []
    with open(os.path.join(here, f"reliability_{{name}}.csv")) as fh:
        for row in csv.DictReader(fh):
            xs.append(float(row["bin_mean_pred"]))
            ys.append(float(row["bin_empirical"]))
    ax.plot([0, 1], [0, 1], "k--", linewidth=0.8)
    ax.plot(xs, ys, "o-", markersize=3)
    ax.set_title(name)
    ax.set_xlabel("predicted probability")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
axes[0][0].set_ylabel("empirical probability")
fig.tight_layout()
fig.savefig(os.path.join(here, "reliability.png"), dpi=150)
print("wrote", os.path.join(here, "reliability.png"))
"#
    )
}
