//! Stratified k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{CalibraError, Result};

/// Fold index per instance, produced by stratified assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub seed: u64,
}

impl FoldAssignment {
    /// Instance indices held out by fold `f`.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == f)
            .collect()
    }

    /// Instance indices available for training when fold `f` is held out.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != f)
            .collect()
    }
}

/// Stratified fold assignment over raw labels. Within each class the
/// instances are shuffled with a seeded RNG and dealt round-robin, so
/// per-class counts across folds differ by at most one and the result is
/// deterministic for a given seed.
pub fn stratified_assignment(labels: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(CalibraError::InvalidArgument(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    if k > labels.len() {
        return Err(CalibraError::InvalidArgument(format!(
            "fold count {k} exceeds instance count {}",
            labels.len()
        )));
    }
    let num_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &label) in labels.iter().enumerate() {
        by_class[label].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    // A rotating start fold spreads remainders of small classes over folds
    // instead of always piling them onto fold 0.
    let mut start = 0usize;
    for members in by_class.iter_mut() {
        members.shuffle(&mut rng);
        for (pos, &i) in members.iter().enumerate() {
            assignment[i] = (start + pos) % k;
        }
        start = (start + members.len()) % k;
    }
    Ok(FoldAssignment { k, assignment, seed })
}

/// Stratified folds for a dataset (see [`stratified_assignment`]).
pub fn stratified_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<FoldAssignment> {
    stratified_assignment(&dataset.labels, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_fold_counts(labels: &[usize], fa: &FoldAssignment) -> Vec<Vec<usize>> {
        let m = labels.iter().copied().max().unwrap() + 1;
        let mut counts = vec![vec![0usize; fa.k]; m];
        for (i, &label) in labels.iter().enumerate() {
            counts[label][fa.assignment[i]] += 1;
        }
        counts
    }

    #[test]
    fn balanced_small_case() {
        // 6 of class 0, 4 of class 1, two folds: each fold gets 3 + 2.
        let labels = vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 1];
        let fa = stratified_assignment(&labels, 2, 9).unwrap();
        let counts = class_fold_counts(&labels, &fa);
        assert_eq!(counts[0], vec![3, 3]);
        assert_eq!(counts[1], vec![2, 2]);
    }

    #[test]
    fn deterministic_for_seed() {
        let labels: Vec<usize> = (0..50).map(|i| i % 3).collect();
        let a = stratified_assignment(&labels, 5, 123).unwrap();
        let b = stratified_assignment(&labels, 5, 123).unwrap();
        assert_eq!(a.assignment, b.assignment);
        let c = stratified_assignment(&labels, 5, 124).unwrap();
        assert_ne!(a.assignment, c.assignment);
    }

    #[test]
    fn fifty_fifty_ten_folds_exact() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        for seed in [0u64, 1, 2, 77] {
            let fa = stratified_assignment(&labels, 10, seed).unwrap();
            let counts = class_fold_counts(&labels, &fa);
            for c in &counts {
                for &n in c {
                    assert_eq!(n, 5);
                }
            }
        }
    }

    #[test]
    fn per_class_counts_differ_by_at_most_one() {
        let labels: Vec<usize> = (0..53).map(|i| (i * 7) % 4).collect();
        let fa = stratified_assignment(&labels, 5, 3).unwrap();
        let counts = class_fold_counts(&labels, &fa);
        for c in &counts {
            let min = c.iter().min().unwrap();
            let max = c.iter().max().unwrap();
            assert!(max - min <= 1, "class counts {c:?}");
        }
    }

    #[test]
    fn k_larger_than_n_is_an_error() {
        let labels = vec![0, 1, 0];
        assert!(stratified_assignment(&labels, 4, 0).is_err());
        assert!(stratified_assignment(&labels, 1, 0).is_err());
    }

    #[test]
    fn train_test_partition() {
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let fa = stratified_assignment(&labels, 4, 5).unwrap();
        for f in 0..4 {
            let mut all = fa.test_indices(f);
            all.extend(fa.train_indices(f));
            all.sort_unstable();
            assert_eq!(all, (0..20).collect::<Vec<_>>());
        }
    }
}
