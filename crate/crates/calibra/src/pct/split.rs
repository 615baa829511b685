//! Gain-ratio split selection over the original attributes (C4.5 style).
//!
//! Numeric attributes use binary splits at midpoints between consecutive
//! distinct values; categorical attributes split multiway with one branch
//! per declared value. A candidate is valid only when no branch is empty
//! and at least two branches hold at least two instances.

use crate::data::{AttrKind, Attribute, Cell};
use crate::pct::{ScoreRecord, Split};

const MIN_GAIN: f64 = 1e-10;
const MIN_BRANCH: usize = 2;

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let total_f = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total_f;
            -p * p.log2()
        })
        .sum()
}

struct Candidate {
    split: Split,
    gain_ratio: f64,
}

/// Evaluates the gain ratio of class labels over every original attribute
/// and returns the best valid split, or `None` when no candidate has
/// positive information gain.
pub fn best_split(
    records: &[ScoreRecord],
    indices: &[usize],
    schema: &[Attribute],
    num_classes: usize,
) -> Option<Split> {
    if indices.len() < 2 {
        return None;
    }
    let n = indices.len();
    let mut base_counts = vec![0usize; num_classes];
    for &i in indices {
        base_counts[records[i].label] += 1;
    }
    let base_entropy = entropy(&base_counts, n);

    let mut best: Option<Candidate> = None;
    for (attr_idx, attr) in schema.iter().enumerate() {
        let candidate = match &attr.kind {
            AttrKind::Categorical(values) => {
                categorical_candidate(records, indices, attr_idx, values.len(), num_classes, base_entropy)
            }
            AttrKind::Numeric => {
                numeric_candidate(records, indices, attr_idx, num_classes, base_entropy)
            }
        };
        if let Some(c) = candidate {
            if best.as_ref().map_or(true, |b| c.gain_ratio > b.gain_ratio) {
                best = Some(c);
            }
        }
    }
    best.map(|c| c.split)
}

fn split_stats(branch_counts: &[Vec<usize>], n: usize, base_entropy: f64) -> Option<(f64, f64)> {
    let sizes: Vec<usize> = branch_counts.iter().map(|c| c.iter().sum()).collect();
    if sizes.iter().any(|&s| s == 0) {
        return None;
    }
    if sizes.iter().filter(|&&s| s >= MIN_BRANCH).count() < 2 {
        return None;
    }
    let mut cond_entropy = 0.0;
    let mut split_info = 0.0;
    for (counts, &size) in branch_counts.iter().zip(&sizes) {
        let frac = size as f64 / n as f64;
        cond_entropy += frac * entropy(counts, size);
        split_info -= frac * frac.log2();
    }
    let gain = base_entropy - cond_entropy;
    if gain <= MIN_GAIN || split_info <= 0.0 {
        return None;
    }
    Some((gain, split_info))
}

fn categorical_candidate(
    records: &[ScoreRecord],
    indices: &[usize],
    attr_idx: usize,
    num_values: usize,
    num_classes: usize,
    base_entropy: f64,
) -> Option<Candidate> {
    let mut branch_counts = vec![vec![0usize; num_classes]; num_values];
    for &i in indices {
        let Cell::Cat(v) = records[i].attrs[attr_idx] else {
            return None;
        };
        branch_counts[v][records[i].label] += 1;
    }
    let (gain, split_info) = split_stats(&branch_counts, indices.len(), base_entropy)?;
    let majority = branch_counts
        .iter()
        .enumerate()
        .max_by(|a, b| {
            let sa: usize = a.1.iter().sum();
            let sb: usize = b.1.iter().sum();
            sa.cmp(&sb).then(b.0.cmp(&a.0))
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    Some(Candidate {
        split: Split::Categorical {
            attr: attr_idx,
            majority_branch: majority,
        },
        gain_ratio: gain / split_info,
    })
}

fn numeric_candidate(
    records: &[ScoreRecord],
    indices: &[usize],
    attr_idx: usize,
    num_classes: usize,
    base_entropy: f64,
) -> Option<Candidate> {
    let mut pairs: Vec<(f64, usize)> = indices
        .iter()
        .map(|&i| {
            let Cell::Num(v) = records[i].attrs[attr_idx] else {
                return (f64::NAN, records[i].label);
            };
            (v, records[i].label)
        })
        .collect();
    if pairs.iter().any(|(v, _)| v.is_nan()) {
        return None;
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));

    let n = pairs.len();
    let mut total_counts = vec![0usize; num_classes];
    for &(_, label) in &pairs {
        total_counts[label] += 1;
    }
    let mut left_counts = vec![0usize; num_classes];
    let mut best: Option<Candidate> = None;
    for k in 0..n - 1 {
        left_counts[pairs[k].1] += 1;
        if pairs[k + 1].0 <= pairs[k].0 {
            continue;
        }
        let right_counts: Vec<usize> = total_counts
            .iter()
            .zip(&left_counts)
            .map(|(t, l)| t - l)
            .collect();
        let branches = vec![left_counts.clone(), right_counts];
        let Some((gain, split_info)) = split_stats(&branches, n, base_entropy) else {
            continue;
        };
        let gain_ratio = gain / split_info;
        if best.as_ref().map_or(true, |b| gain_ratio > b.gain_ratio) {
            let threshold = pairs[k].0 + (pairs[k + 1].0 - pairs[k].0) / 2.0;
            let majority = if k + 1 >= n - k - 1 { 0 } else { 1 };
            best = Some(Candidate {
                split: Split::Numeric {
                    attr: attr_idx,
                    threshold,
                    majority_branch: majority,
                },
                gain_ratio,
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Attribute;

    fn rec(attrs: Vec<Cell>, label: usize) -> ScoreRecord {
        ScoreRecord {
            attrs,
            scores: vec![0.0],
            label,
        }
    }

    fn all_indices(records: &[ScoreRecord]) -> Vec<usize> {
        (0..records.len()).collect()
    }

    #[test]
    fn perfect_binary_attribute_wins() {
        let schema = vec![
            Attribute::categorical("noise", vec!["a".into(), "b".into()]),
            Attribute::categorical("signal", vec!["x".into(), "y".into()]),
        ];
        let records: Vec<ScoreRecord> = (0..8)
            .map(|i| {
                rec(
                    vec![Cell::Cat(i % 2), Cell::Cat(usize::from(i < 4))],
                    usize::from(i < 4),
                )
            })
            .collect();
        let split = best_split(&records, &all_indices(&records), &schema, 2).unwrap();
        match split {
            Split::Categorical { attr, .. } => assert_eq!(attr, 1),
            other => panic!("unexpected split {other:?}"),
        }
    }

    #[test]
    fn xor_has_no_split() {
        // Labels are the XOR of two binary attributes: every single-attribute
        // split has zero information gain.
        let schema = vec![
            Attribute::categorical("p", vec!["0".into(), "1".into()]),
            Attribute::categorical("q", vec!["0".into(), "1".into()]),
        ];
        let mut records = Vec::new();
        for p in 0..2usize {
            for q in 0..2usize {
                for _ in 0..2 {
                    records.push(rec(vec![Cell::Cat(p), Cell::Cat(q)], p ^ q));
                }
            }
        }
        assert!(best_split(&records, &all_indices(&records), &schema, 2).is_none());
    }

    #[test]
    fn three_way_categorical_beats_weaker_numeric() {
        // 12 rows; the three-way attribute separates classes perfectly
        // (4 rows per value), while the numeric attribute muddles them.
        let schema = vec![
            Attribute::numeric("num"),
            Attribute::categorical("cat", vec!["a".into(), "b".into(), "c".into()]),
        ];
        let mut records = Vec::new();
        for i in 0..12usize {
            let group = i / 4;
            let label = usize::from(group > 0);
            // The numeric attribute only loosely tracks the label.
            let num = (i % 5) as f64 + if label == 1 { 1.0 } else { 0.0 };
            records.push(rec(vec![Cell::Num(num), Cell::Cat(group)], label));
        }
        let split = best_split(&records, &all_indices(&records), &schema, 2).unwrap();
        match split {
            Split::Categorical { attr, .. } => assert_eq!(attr, 1),
            other => panic!("expected the categorical split, got {other:?}"),
        }
    }

    #[test]
    fn numeric_threshold_at_midpoint() {
        let schema = vec![Attribute::numeric("x")];
        let records: Vec<ScoreRecord> = [1.0, 2.0, 3.0, 10.0, 11.0, 12.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| rec(vec![Cell::Num(v)], usize::from(i >= 3)))
            .collect();
        let split = best_split(&records, &all_indices(&records), &schema, 2).unwrap();
        match split {
            Split::Numeric { threshold, .. } => assert_eq!(threshold, 6.5),
            other => panic!("unexpected split {other:?}"),
        }
    }

    #[test]
    fn branches_with_fewer_than_two_instances_rejected() {
        // Three points: every threshold leaves only one branch with two
        // instances, so no split is valid.
        let schema = vec![Attribute::numeric("x")];
        let records: Vec<ScoreRecord> = [1.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| rec(vec![Cell::Num(v)], usize::from(i == 2)))
            .collect();
        assert!(best_split(&records, &all_indices(&records), &schema, 2).is_none());
    }

    #[test]
    fn categorical_with_absent_value_rejected() {
        // Value "c" never occurs, so the multiway split would create an
        // empty branch.
        let schema = vec![Attribute::categorical(
            "cat",
            vec!["a".into(), "b".into(), "c".into()],
        )];
        let records: Vec<ScoreRecord> = (0..8)
            .map(|i| rec(vec![Cell::Cat(i % 2)], i % 2))
            .collect();
        assert!(best_split(&records, &all_indices(&records), &schema, 2).is_none());
    }

    #[test]
    fn pure_subset_has_no_split() {
        let schema = vec![Attribute::numeric("x")];
        let records: Vec<ScoreRecord> = (0..6)
            .map(|i| rec(vec![Cell::Num(i as f64)], 0))
            .collect();
        assert!(best_split(&records, &all_indices(&records), &schema, 2).is_none());
    }
}
