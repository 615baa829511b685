//! Metrics, benchmark protocol, significance tests and reliability curves.

mod benchmark;
mod metrics;
mod stats;

pub use benchmark::{
    format_report_table, reliability_report, run_benchmark, write_reliability_csv,
    write_report_csv, BenchmarkConfig, Comparison, DatasetReport, EvaluationReport, Mark,
    MethodResult,
};
pub use metrics::{
    expected_cost_decision, reliability_bins, rmse, ReliabilityBin, ReliabilityBins,
};
pub use stats::{corrected_ttest, sign_test};
