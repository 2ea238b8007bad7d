//! Discretization and the entropy-based relevance scores.

use std::collections::BTreeMap;

use crate::dataset::Label;

pub const DEFAULT_BINS: usize = 10;

/// Equal-frequency cut points at midpoints between adjacent distinct values.
///
/// Each of the `bins − 1` quantile positions snaps to the nearest position where the
/// sorted column changes value (the later one on a tie), so every bin is non-empty
/// and tied columns yield fewer bins.
pub fn bin_edges(column: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let changes: Vec<usize> = (1..n).filter(|&i| sorted[i] != sorted[i - 1]).collect();
    if changes.is_empty() || bins < 2 {
        return Vec::new();
    }
    let mut cuts: Vec<usize> = (1..bins)
        .map(|b| {
            let target = b * n / bins;
            let at = changes.partition_point(|&c| c < target);
            match (at.checked_sub(1).map(|i| changes[i]), changes.get(at).copied()) {
                (Some(lo), Some(hi)) => {
                    if target - lo < hi - target {
                        lo
                    } else {
                        hi
                    }
                }
                (Some(lo), None) => lo,
                (None, Some(hi)) => hi,
                (None, None) => unreachable!("changes is non-empty"),
            }
        })
        .collect();
    cuts.dedup();
    cuts.into_iter().map(|c| sorted[c - 1] + (sorted[c] - sorted[c - 1]) / 2.0).collect()
}

/// Bin index of `value`: the number of edges strictly below it.
pub fn bin_of(edges: &[f64], value: f64) -> usize {
    edges.partition_point(|&e| e < value)
}

pub fn discretize(column: &[f64], bins: usize) -> Vec<usize> {
    let edges = bin_edges(column, bins);
    column.iter().map(|&v| bin_of(&edges, v)).collect()
}

fn entropy_of_counts<I: IntoIterator<Item = usize>>(counts: I, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Contingency table: bin → `[P count, nP count]`.
fn table(x: &[usize], y: &[Label]) -> BTreeMap<usize, [usize; 2]> {
    let mut t: BTreeMap<usize, [usize; 2]> = BTreeMap::new();
    for (&b, &l) in x.iter().zip(y) {
        t.entry(b).or_default()[(l == Label::NP) as usize] += 1;
    }
    t
}

/// Shannon entropy in bits of the class labels.
pub fn class_entropy(y: &[Label]) -> f64 {
    let p = y.iter().filter(|&&l| l == Label::P).count();
    entropy_of_counts([p, y.len() - p], y.len())
}

pub fn bin_entropy(x: &[usize]) -> f64 {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &b in x {
        *counts.entry(b).or_default() += 1;
    }
    entropy_of_counts(counts.into_values(), x.len())
}

/// `H(Y) − H(Y|X)` in bits, clamped at 0 against rounding.
pub fn info_gain(x: &[usize], y: &[Label]) -> f64 {
    let n = y.len();
    if n == 0 {
        return 0.0;
    }
    let conditional: f64 = table(x, y)
        .values()
        .map(|c| {
            let m = c[0] + c[1];
            m as f64 / n as f64 * entropy_of_counts(*c, m)
        })
        .sum();
    (class_entropy(y) - conditional).max(0.0)
}

/// `IG / H(X)`, or 0 when `H(X) = 0`.
pub fn gain_ratio(x: &[usize], y: &[Label]) -> f64 {
    let hx = bin_entropy(x);
    if hx == 0.0 {
        0.0
    } else {
        (info_gain(x, y) / hx).min(1.0)
    }
}

/// `2·IG / (H(X) + H(Y))`, or 0 when both entropies vanish.
pub fn sym_uncertainty(x: &[usize], y: &[Label]) -> f64 {
    let denom = bin_entropy(x) + class_entropy(y);
    if denom == 0.0 {
        0.0
    } else {
        (2.0 * info_gain(x, y) / denom).min(1.0)
    }
}

/// Training accuracy of the rule mapping each bin to its majority class (ties to P).
pub fn one_r(x: &[usize], y: &[Label]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let correct: usize = table(x, y).values().map(|c| c[0].max(c[1])).sum();
    correct as f64 / y.len() as f64
}
