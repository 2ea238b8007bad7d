use std::cmp::Ordering;

use rand::seq::index;
use rayon::prelude::*;

use crate::dataset::{Dataset, Label};
use crate::seed;

pub const DEFAULT_NEIGHBORS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ReliefWeights {
    pub weights: Vec<f64>,
    /// Set when a class had too few members for `k` neighbors.
    pub note: Option<String>,
}

/// Min-max normalized columns; constant columns become all zeros.
fn normalized(dataset: &Dataset) -> Vec<Vec<f64>> {
    let n_features = dataset.schema().len();
    let mut rows: Vec<Vec<f64>> = dataset.instances().iter().map(|i| i.values.clone()).collect();
    for f in 0..n_features {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[f]), hi.max(r[f])));
        let span = hi - lo;
        for r in &mut rows {
            r[f] = if span > 0.0 { (r[f] - lo) / span } else { 0.0 };
        }
    }
    rows
}

/// ReliefF weights for two classes.
///
/// Each of `m` sampled instances (all of them when `m` is `None`, in dataset order)
/// contributes `(mean miss diff − mean hit diff) / m` per feature, using its `k` nearest
/// hits and misses under Manhattan distance on normalized features. Distance ties are
/// broken by instance id.
pub fn relieff(dataset: &Dataset, k: usize, m: Option<usize>, seed: u64) -> ReliefWeights {
    let n = dataset.len();
    let n_features = dataset.schema().len();
    let rows = normalized(dataset);
    let labels = dataset.labels();
    let sampled: Vec<usize> = match m {
        Some(m) if m < n => {
            let mut s = index::sample(&mut seed::rng(seed), n, m).into_vec();
            s.sort_unstable();
            s
        }
        _ => (0..n).collect(),
    };
    if sampled.is_empty() || n_features == 0 {
        return ReliefWeights { weights: vec![0.0; n_features], note: None };
    }
    let k = k.max(1);
    let counts = dataset.counts();
    let note = [Label::P, Label::NP]
        .into_iter()
        .filter(|&l| counts.of(l) > 0 && counts.of(l) < k + 1)
        .map(|l| format!("class {} has {} members; using all available neighbors", l, counts.of(l)))
        .reduce(|a, b| format!("{}; {}", a, b));

    let ids: Vec<&str> = dataset.instances().iter().map(|i| i.id.as_str()).collect();
    let contributions: Vec<Vec<f64>> = sampled
        .par_iter()
        .map(|&r| {
            let order = |a: &(f64, usize), b: &(f64, usize)| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| ids[a.1].cmp(ids[b.1]))
            };
            let nearest = |same: bool| -> Vec<usize> {
                let mut cands: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != r && (labels[j] == labels[r]) == same)
                    .map(|j| {
                        let d: f64 = rows[r].iter().zip(&rows[j]).map(|(a, b)| (a - b).abs()).sum();
                        (d, j)
                    })
                    .collect();
                if cands.len() > k {
                    cands.select_nth_unstable_by(k - 1, order);
                    cands.truncate(k);
                }
                cands.sort_by(order);
                cands.into_iter().map(|(_, j)| j).collect()
            };
            let hits = nearest(true);
            let misses = nearest(false);
            (0..n_features)
                .map(|f| {
                    let mean = |set: &[usize]| -> f64 {
                        if set.is_empty() {
                            0.0
                        } else {
                            set.iter().map(|&j| (rows[r][f] - rows[j][f]).abs()).sum::<f64>() / set.len() as f64
                        }
                    };
                    mean(&misses) - mean(&hits)
                })
                .collect()
        })
        .collect();

    let mut weights = vec![0.0; n_features];
    for c in &contributions {
        for (w, v) in weights.iter_mut().zip(c) {
            *w += v;
        }
    }
    let m = sampled.len() as f64;
    for w in &mut weights {
        *w /= m;
    }
    ReliefWeights { weights, note }
}
