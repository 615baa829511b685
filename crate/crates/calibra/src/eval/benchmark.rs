//! Repeated stratified cross-validation benchmark over datasets and
//! calibration methods, with corrected resampled t-tests against the first
//! method, plus the reliability-diagram pipeline.
//!
//! Test folds never participate in calibration: imputation statistics, the
//! internal score-collection folds, calibrator fitting and the final base
//! model all see only the training split of each outer fold.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{collect_scores, BaseLearnerKind, BaseModel};
use crate::data::{stratified_folds, Cell, Dataset, FoldAssignment, Imputer};
use crate::derive_seed;
use crate::error::{CalibraError, Result};
use crate::eval::metrics::{reliability_bins, ReliabilityBins};
use crate::eval::stats::corrected_ttest;
use crate::serialize::{FittedCalibrator, Method};

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub base: BaseLearnerKind,
    pub methods: Vec<Method>,
    pub runs: usize,
    pub folds: usize,
    pub seed: u64,
    /// Two-tailed significance level for marks (default 0.01).
    pub significance: f64,
    /// When set, every fold asserts that test-row hashes are disjoint from
    /// all rows used in calibrator fitting. Only meaningful for datasets
    /// with unique rows.
    pub audit_leakage: bool,
}

impl BenchmarkConfig {
    pub fn new(base: BaseLearnerKind, methods: Vec<Method>) -> BenchmarkConfig {
        BenchmarkConfig {
            base,
            methods,
            runs: 10,
            folds: 10,
            seed: 1,
            significance: 0.01,
            audit_leakage: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub mean_rmse: f64,
    /// One RMSE per run x fold, in canonical (run, fold) order.
    pub fold_rmse: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mark {
    /// The first method is significantly better than this one.
    Better,
    /// The first method is significantly worse.
    Worse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub method: Method,
    pub t: f64,
    pub p: f64,
    pub mark: Option<Mark>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetReport {
    pub dataset: String,
    pub results: Vec<MethodResult>,
    /// Comparisons of every non-first method against the first.
    pub comparisons: Vec<Comparison>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub base_learner: String,
    pub runs: usize,
    pub folds: usize,
    pub seed: u64,
    pub significance: f64,
    pub datasets: Vec<DatasetReport>,
}

/// Runs the full benchmark. Per-dataset failures are recorded in the report
/// and the remaining datasets continue.
pub fn run_benchmark(datasets: &[Dataset], config: &BenchmarkConfig) -> EvaluationReport {
    let reports = datasets
        .iter()
        .map(|d| match bench_dataset(d, config) {
            Ok((results, comparisons)) => DatasetReport {
                dataset: d.name.clone(),
                results,
                comparisons,
                error: None,
            },
            Err(e) => DatasetReport {
                dataset: d.name.clone(),
                results: Vec::new(),
                comparisons: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect();
    EvaluationReport {
        base_learner: config.base.name().to_string(),
        runs: config.runs,
        folds: config.folds,
        seed: config.seed,
        significance: config.significance,
        datasets: reports,
    }
}

fn bench_dataset(
    dataset: &Dataset,
    config: &BenchmarkConfig,
) -> Result<(Vec<MethodResult>, Vec<Comparison>)> {
    if config.methods.is_empty() {
        return Err(CalibraError::InvalidArgument("no methods selected".into()));
    }
    if config.runs == 0 {
        return Err(CalibraError::InvalidArgument("runs must be positive".into()));
    }
    let assignments: Vec<FoldAssignment> = (0..config.runs)
        .map(|run| {
            stratified_folds(
                dataset,
                config.folds,
                derive_seed(config.seed, &format!("{}-run-{run}", dataset.name)),
            )
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..config.runs)
        .flat_map(|r| (0..config.folds).map(move |f| (r, f)))
        .collect();
    let per_job: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(run, fold)| bench_fold(dataset, &assignments[run], run, fold, config))
        .collect();

    let mut fold_rmse: Vec<Vec<f64>> = vec![Vec::with_capacity(jobs.len()); config.methods.len()];
    for job in per_job {
        let values = job?;
        for (m, v) in values.into_iter().enumerate() {
            fold_rmse[m].push(v);
        }
    }

    let results: Vec<MethodResult> = config
        .methods
        .iter()
        .zip(&fold_rmse)
        .map(|(&method, rmses)| MethodResult {
            method,
            mean_rmse: rmses.iter().sum::<f64>() / rmses.len() as f64,
            fold_rmse: rmses.clone(),
        })
        .collect();

    // Corrected resampled t-test of each method against the first; the
    // test-to-train ratio follows the fold geometry (1/k) / (1 - 1/k).
    let mut comparisons = Vec::new();
    for m in 1..config.methods.len() {
        let diffs: Vec<f64> = fold_rmse[m]
            .iter()
            .zip(&fold_rmse[0])
            .map(|(other, first)| other - first)
            .collect();
        let (t, p) = corrected_ttest(&diffs, config.folds - 1, 1)?;
        let mean_diff = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let mark = if p < config.significance {
            if mean_diff > 0.0 {
                Some(Mark::Better)
            } else {
                Some(Mark::Worse)
            }
        } else {
            None
        };
        comparisons.push(Comparison {
            method: config.methods[m],
            t,
            p,
            mark,
        });
    }
    Ok((results, comparisons))
}

fn row_hash(cells: &[Cell], label: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut mix = |v: u64, h: &mut u64| {
        *h ^= v;
        *h = h.wrapping_mul(0x1000_0000_01b3);
    };
    for cell in cells {
        match cell {
            Cell::Num(v) => {
                mix(1, &mut h);
                mix(v.to_bits(), &mut h);
            }
            Cell::Cat(i) => {
                mix(2, &mut h);
                mix(*i as u64, &mut h);
            }
            Cell::Missing => mix(3, &mut h),
        }
    }
    mix(label as u64 + 17, &mut h);
    h
}

fn bench_fold(
    dataset: &Dataset,
    assignment: &FoldAssignment,
    run: usize,
    fold: usize,
    config: &BenchmarkConfig,
) -> Result<Vec<f64>> {
    let train_idx = assignment.train_indices(fold);
    let test_idx = assignment.test_indices(fold);
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(CalibraError::InvalidData(format!(
            "empty train or test split in run {run} fold {fold}"
        )));
    }
    let train = dataset.subset(&train_idx);
    let imputer = Imputer::fit(&train)?;
    let train_imp = imputer.apply(&train)?;

    let table = collect_scores(
        config.base,
        &train_imp,
        derive_seed(
            config.seed,
            &format!("{}-r{run}-f{fold}-internal", dataset.name),
        ),
    )?;

    if config.audit_leakage {
        let train_hashes: std::collections::HashSet<u64> = train_idx
            .iter()
            .map(|&i| row_hash(&dataset.rows[i], dataset.labels[i]))
            .collect();
        for &i in &test_idx {
            if train_hashes.contains(&row_hash(&dataset.rows[i], dataset.labels[i])) {
                return Err(CalibraError::InvalidData(format!(
                    "leakage audit: test row {i} hash found among calibration rows"
                )));
            }
        }
    }

    let calibrators: Vec<FittedCalibrator> = config
        .methods
        .iter()
        .map(|&method| {
            FittedCalibrator::fit(
                method,
                &table,
                derive_seed(
                    config.seed,
                    &format!("{}-r{run}-f{fold}-{}", dataset.name, method.name()),
                ),
            )
        })
        .collect::<Result<_>>()?;

    let base_model = BaseModel::fit(config.base, &train_imp)?;
    let m = dataset.num_classes();
    let mut sse = vec![0.0f64; config.methods.len()];
    for &i in &test_idx {
        let row = imputer.apply_row(&dataset.rows[i]);
        let raw = base_model.predict(&row)?;
        for (k, cal) in calibrators.iter().enumerate() {
            let p = cal.calibrate(&row, &raw)?;
            for (j, &pj) in p.iter().enumerate() {
                let y = if dataset.labels[i] == j { 1.0 } else { 0.0 };
                sse[k] += (pj - y) * (pj - y);
            }
        }
    }
    Ok(sse
        .into_iter()
        .map(|s| (s / (test_idx.len() * m) as f64).sqrt())
        .collect())
}

/// Reliability curves from one pass of stratified k-fold cross-validation:
/// held-out positive-class probabilities are pooled across folds and binned.
/// Returns ("raw", bins) for the uncalibrated base learner followed by one
/// entry per method.
pub fn reliability_report(
    dataset: &Dataset,
    base: BaseLearnerKind,
    methods: &[Method],
    folds: usize,
    seed: u64,
    positive_class: usize,
    max_bins: usize,
) -> Result<Vec<(String, ReliabilityBins)>> {
    if positive_class >= dataset.num_classes() {
        return Err(CalibraError::InvalidArgument(format!(
            "positive class index {positive_class} out of range"
        )));
    }
    let assignment = stratified_folds(dataset, folds, derive_seed(seed, "reliability"))?;
    let n = dataset.num_instances();

    let per_fold: Vec<Result<Vec<(usize, Vec<f64>)>>> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let train_idx = assignment.train_indices(fold);
            let test_idx = assignment.test_indices(fold);
            let train = dataset.subset(&train_idx);
            let imputer = Imputer::fit(&train)?;
            let train_imp = imputer.apply(&train)?;
            let table = collect_scores(
                base,
                &train_imp,
                derive_seed(seed, &format!("reliability-f{fold}-internal")),
            )?;
            let calibrators: Vec<FittedCalibrator> = methods
                .iter()
                .map(|&method| {
                    FittedCalibrator::fit(
                        method,
                        &table,
                        derive_seed(seed, &format!("reliability-f{fold}-{}", method.name())),
                    )
                })
                .collect::<Result<_>>()?;
            let base_model = BaseModel::fit(base, &train_imp)?;
            let mut out = Vec::with_capacity(test_idx.len());
            for &i in &test_idx {
                let row = imputer.apply_row(&dataset.rows[i]);
                let raw = base_model.predict(&row)?;
                let mut probs = Vec::with_capacity(methods.len() + 1);
                probs.push(raw[positive_class]);
                for cal in &calibrators {
                    probs.push(cal.calibrate(&row, &raw)?[positive_class]);
                }
                out.push((i, probs));
            }
            Ok(out)
        })
        .collect();

    let mut pooled: Vec<Option<Vec<f64>>> = vec![None; n];
    for fold in per_fold {
        for (i, probs) in fold? {
            pooled[i] = Some(probs);
        }
    }
    let pooled: Vec<Vec<f64>> = pooled
        .into_iter()
        .map(|p| p.expect("every instance held out exactly once"))
        .collect();
    let labels: Vec<bool> = dataset.labels.iter().map(|&l| l == positive_class).collect();

    let mut out = Vec::with_capacity(methods.len() + 1);
    for (k, name) in std::iter::once("raw".to_string())
        .chain(methods.iter().map(|m| m.name().to_string()))
        .enumerate()
    {
        let probs: Vec<f64> = pooled.iter().map(|p| p[k]).collect();
        out.push((name, reliability_bins(&probs, &labels, max_bins)?));
    }
    Ok(out)
}

/// Writes the benchmark report as CSV: one row per dataset x method with the
/// mean RMSE and the significance mark against the first method.
pub fn write_report_csv(report: &EvaluationReport, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["dataset", "method", "mean_rmse", "t", "p", "mark"])?;
    for d in &report.datasets {
        if let Some(err) = &d.error {
            writer.write_record([d.dataset.as_str(), "error", err, "", "", ""])?;
            continue;
        }
        for r in &d.results {
            let comparison = d.comparisons.iter().find(|c| c.method == r.method);
            let (t, p, mark) = match comparison {
                Some(c) => (
                    format!("{}", c.t),
                    format!("{}", c.p),
                    match c.mark {
                        Some(Mark::Better) => "better".to_string(),
                        Some(Mark::Worse) => "worse".to_string(),
                        None => String::new(),
                    },
                ),
                None => (String::new(), String::new(), String::new()),
            };
            writer.write_record([
                d.dataset.as_str(),
                r.method.name(),
                &format!("{}", r.mean_rmse),
                &t,
                &p,
                &mark,
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Plain-text table mirroring the published layout: one row per dataset,
/// one RMSE column per method, with a bullet for a significant win of the
/// first method and a circle for a significant loss.
pub fn format_report_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    let methods: Vec<&str> = report
        .datasets
        .iter()
        .find(|d| d.error.is_none())
        .map(|d| d.results.iter().map(|r| r.method.name()).collect())
        .unwrap_or_default();
    out.push_str(&format!("{:<20}", "Dataset"));
    for m in &methods {
        out.push_str(&format!("{m:>12}  "));
    }
    out.push('\n');
    for d in &report.datasets {
        if let Some(err) = &d.error {
            out.push_str(&format!("{:<20}error: {err}\n", d.dataset));
            continue;
        }
        out.push_str(&format!("{:<20}", d.dataset));
        for r in &d.results {
            let mark = d
                .comparisons
                .iter()
                .find(|c| c.method == r.method)
                .and_then(|c| c.mark)
                .map(|m| match m {
                    Mark::Better => " \u{2022}",
                    Mark::Worse => " \u{25e6}",
                })
                .unwrap_or("  ");
            out.push_str(&format!("{:>12.3}{mark}", r.mean_rmse));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "\u{2022}/\u{25e6}: significant win/loss of {} at p = {}\n",
        methods.first().unwrap_or(&"first method"),
        report.significance
    ));
    out
}

/// Writes one reliability curve as plot-ready CSV.
pub fn write_reliability_csv(bins: &ReliabilityBins, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["bin_mean_pred", "bin_empirical", "count"])?;
    for b in &bins.bins {
        writer.write_record([
            format!("{}", b.mean_pred),
            format!("{}", b.empirical),
            b.count.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Attribute;

    /// 100-row synthetic binary dataset with unique rows (an index column
    /// guarantees uniqueness for the leakage audit).
    fn synthetic(n: usize) -> Dataset {
        let rows: Vec<Vec<Cell>> = (0..n)
            .map(|i| {
                vec![
                    Cell::Num(i as f64),
                    Cell::Num(((i * 7) % 13) as f64),
                    Cell::Cat(i % 3),
                ]
            })
            .collect();
        let labels: Vec<usize> = (0..n).map(|i| usize::from((i * 7) % 13 >= 6)).collect();
        Dataset::new(
            "synthetic",
            vec![
                Attribute::numeric("idx"),
                Attribute::numeric("x"),
                Attribute::categorical("c", vec!["a".into(), "b".into(), "c".into()]),
            ],
            rows,
            labels,
            vec!["neg".into(), "pos".into()],
        )
        .unwrap()
    }

    #[test]
    fn smoke_run_completes_with_finite_rmse() {
        let d = synthetic(100);
        let mut config = BenchmarkConfig::new(
            BaseLearnerKind::NaiveBayes,
            vec![Method::Pct, Method::Platt, Method::Isotonic],
        );
        config.runs = 1;
        config.folds = 2;
        config.audit_leakage = true;
        let report = run_benchmark(&[d], &config);
        assert_eq!(report.datasets.len(), 1);
        let ds = &report.datasets[0];
        assert!(ds.error.is_none(), "error: {:?}", ds.error);
        for r in &ds.results {
            assert!(r.mean_rmse.is_finite());
            assert_eq!(r.fold_rmse.len(), 2);
            assert!(r.fold_rmse.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
        assert_eq!(ds.comparisons.len(), 2);
    }

    #[test]
    fn deterministic_given_seed() {
        let d = synthetic(80);
        let mut config = BenchmarkConfig::new(
            BaseLearnerKind::NaiveBayes,
            vec![Method::Platt, Method::Isotonic],
        );
        config.runs = 2;
        config.folds = 3;
        config.seed = 99;
        let a = run_benchmark(&[d.clone()], &config);
        let b = run_benchmark(&[d], &config);
        let ra = serde_json::to_string(&a).unwrap();
        let rb = serde_json::to_string(&b).unwrap();
        assert_eq!(ra, rb);
    }

    #[test]
    fn failing_dataset_reported_and_others_continue() {
        let good = synthetic(60);
        // Too few rows for 10 folds: this dataset must fail cleanly.
        let bad = synthetic(5);
        let config = BenchmarkConfig::new(BaseLearnerKind::NaiveBayes, vec![Method::Platt]);
        let report = run_benchmark(&[bad, good], &config);
        assert!(report.datasets[0].error.is_some());
        assert!(report.datasets[1].error.is_none());
    }

    #[test]
    fn reliability_covers_all_instances() {
        let d = synthetic(90);
        let curves = reliability_report(
            &d,
            BaseLearnerKind::NaiveBayes,
            &[Method::Platt],
            3,
            7,
            1,
            30,
        )
        .unwrap();
        assert_eq!(curves.len(), 2);
        for (_, bins) in &curves {
            let total: usize = bins.bins.iter().map(|b| b.count).sum();
            assert_eq!(total, 90);
            for w in bins.bins.windows(2) {
                assert!(w[0].mean_pred <= w[1].mean_pred);
            }
        }
    }
}
