use std::cmp::Ordering;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dataset::Label;

/// Counts with P as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        ConfusionMatrix { tp, fn_, fp, tn }
    }

    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::P, Label::P) => self.tp += 1,
            (Label::P, Label::NP) => self.fn_ += 1,
            (Label::NP, Label::P) => self.fp += 1,
            (Label::NP, Label::NP) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn metrics(&self) -> MetricsReport {
        metrics_from_confusion(self)
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix::new(self.tp + o.tp, self.fn_ + o.fn_, self.fp + o.fp, self.tn + o.tn)
    }
}

impl AddAssign for ConfusionMatrix {
    fn add_assign(&mut self, o: ConfusionMatrix) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = ConfusionMatrix>>(iter: I) -> Self {
        iter.fold(ConfusionMatrix::default(), Add::add)
    }
}

/// `None` marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f_measure: Option<f64>,
    pub g_mean: Option<f64>,
    pub auc: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> MetricsReport {
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let specificity = ratio(cm.tn, cm.tn + cm.fp);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    let g_mean = match (recall, specificity) {
        (Some(r), Some(s)) => Some((r * s).sqrt()),
        _ => None,
    };
    MetricsReport {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        recall,
        specificity,
        precision,
        f_measure,
        g_mean,
        auc: None,
    }
}

fn split_classes(scored: &[(f64, Label)]) -> Result<(usize, usize), EvalError> {
    let pos = scored.iter().filter(|(_, l)| *l == Label::P).count();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClassScores);
    }
    if scored.iter().any(|(s, _)| s.is_nan()) {
        return Err(EvalError::NanScore);
    }
    Ok((pos, neg))
}

/// Mann-Whitney form: `(#{pos > neg} + ½·#{pos = neg}) / (|pos|·|neg|)`, via mid-ranks.
pub fn roc_auc(scored: &[(f64, Label)]) -> Result<f64, EvalError> {
    let (pos, neg) = split_classes(scored)?;
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.partial_cmp(&scored[b].0).unwrap_or(Ordering::Equal));
    // Twice the rank sum keeps the mid-ranks integral.
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scored[order[j + 1]].0 == scored[order[i]].0 {
            j += 1;
        }
        let ranks2 = (i + 1 + j + 1) as u128;
        let pos_in_group = order[i..=j].iter().filter(|&&k| scored[k].1 == Label::P).count() as u128;
        rank_sum2 += ranks2 * pos_in_group;
        i = j + 1;
    }
    let pos = pos as u128;
    let u2 = rank_sum2 - pos * (pos + 1);
    Ok(u2 as f64 / (2 * pos * neg as u128) as f64)
}

/// Area under the empirical ROC curve by the trapezoid rule; tied scores form one diagonal segment.
pub fn roc_auc_trapezoid(scored: &[(f64, Label)]) -> Result<f64, EvalError> {
    let (pos, neg) = split_classes(scored)?;
    let mut sorted: Vec<(f64, Label)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal));
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let (prev_tp, prev_fp) = (tp, fp);
        let score = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == score {
            match sorted[i].1 {
                Label::P => tp += 1,
                Label::NP => fp += 1,
            }
            i += 1;
        }
        area2 += ((fp - prev_fp) * (tp + prev_tp)) as u128;
    }
    Ok(area2 as f64 / (2 * pos as u128 * neg as u128) as f64)
}
