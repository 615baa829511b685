//! Significance tests for the benchmark: the corrected resampled t-test for
//! repeated cross-validation and the two-tailed sign test for win/loss
//! summaries.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{CalibraError, Result};

/// Corrected resampled t-test over per-run differences. The variance is
/// inflated by (1/N + n_test/n_train) to account for overlapping training
/// sets; degrees of freedom are N - 1 and the p-value is two-tailed.
///
/// Zero-variance edge cases: identical zero differences give p = 1,
/// identical nonzero differences give p = 0.
pub fn corrected_ttest(diffs: &[f64], n_train: usize, n_test: usize) -> Result<(f64, f64)> {
    let n = diffs.len();
    if n < 2 {
        return Err(CalibraError::InvalidArgument(
            "corrected t-test needs at least two runs".into(),
        ));
    }
    if n_train == 0 {
        return Err(CalibraError::InvalidArgument(
            "training-set size must be positive".into(),
        ));
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (n as f64 - 1.0);
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY * mean.signum(), 0.0)
        });
    }
    let correction = 1.0 / n as f64 + n_test as f64 / n_train as f64;
    let t = mean / (correction * var).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| CalibraError::Numeric(e.to_string()))?;
    let p = 2.0 * dist.cdf(-t.abs());
    Ok((t, p.clamp(0.0, 1.0)))
}

/// Two-tailed sign test by normal approximation without continuity
/// correction: z = (W - L) / sqrt(W + L), p = 2 * Phi(-|z|).
pub fn sign_test(wins: usize, losses: usize) -> f64 {
    let total = wins + losses;
    if total == 0 {
        return 1.0;
    }
    let z = (wins as f64 - losses as f64) / (total as f64).sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    (2.0 * normal.cdf(-z.abs())).clamp(0.0, 1.0)
}
