//! calibra: probability calibration for classifier output scores.
//!
//! Implements probability calibration trees (decision trees over the
//! original attributes whose nodes carry LogitBoost-fitted logistic models
//! over base-classifier output scores) together with the standard global
//! baselines, Platt scaling and isotonic regression. Includes built-in base
//! learners (naive Bayes, boosted stumps, boosted trees), a repeated
//! stratified cross-validation benchmark with significance testing, and
//! reliability-diagram export.

pub mod base;
pub mod boost;
pub mod calibrators;
pub mod data;
pub mod error;
pub mod eval;
pub mod pct;
pub mod serialize;

pub use error::{CalibraError, Result};

/// Derives a stream-specific seed from a master seed, so concurrent workers
/// get independent yet reproducible randomness.
pub fn derive_seed(master: u64, stream: &str) -> u64 {
    let mut h: u64 = master ^ 0x9e37_79b9_7f4a_7c15;
    for &b in stream.as_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 33;
    }
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^ (h >> 33)
}
