//! Gaussian classifier with class-conditionally independent features.

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::dataset::{Dataset, Label};

const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesModel {
    pub prior_p: f64,
    pub prior_np: f64,
    /// Per-feature `(mean, variance)` for P and nP.
    pub p_params: Vec<(f64, f64)>,
    pub np_params: Vec<(f64, f64)>,
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

fn log_likelihood(params: &[(f64, f64)], x: &[f64]) -> f64 {
    params
        .iter()
        .zip(x)
        .map(|(&(mean, var), &v)| {
            -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (v - mean).powi(2) / (2.0 * var)
        })
        .sum()
}

impl BayesModel {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let lp = self.prior_p.ln() + log_likelihood(&self.p_params, x);
        let ln = self.prior_np.ln() + log_likelihood(&self.np_params, x);
        // logistic of lp − ln without overflow
        let d = ln - lp;
        if d > 0.0 {
            let e = (-d).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + d.exp())
        }
    }
}

pub fn train_bayes(dataset: &Dataset) -> Result<BayesModel, LearnError> {
    train_bayes_weighted(dataset, [1.0, 1.0])
}

/// Maximum-likelihood fit; class weights `[P, nP]` scale the priors only.
/// Each variance is floored at `1e-9 ×` the feature's overall variance (or `1e-9` if that is zero).
pub fn train_bayes_weighted(dataset: &Dataset, weights: [f64; 2]) -> Result<BayesModel, LearnError> {
    let counts = dataset.counts();
    if counts.p == 0 || counts.np == 0 {
        return Err(LearnError::SingleClass);
    }
    let mass_p = counts.p as f64 * weights[0];
    let mass_np = counts.np as f64 * weights[1];
    let fit = |label: Label| -> Vec<(f64, f64)> {
        (0..dataset.schema().len())
            .map(|f| {
                let overall = mean_var(dataset.instances().iter().map(|i| i.values[f])).1;
                let floor = if overall > 0.0 { VARIANCE_FLOOR * overall } else { VARIANCE_FLOOR };
                let column = dataset
                    .instances()
                    .iter()
                    .filter(|i| i.label == label)
                    .map(|i| i.values[f]);
                let (mean, var) = mean_var(column);
                (mean, var.max(floor))
            })
            .collect()
    };
    Ok(BayesModel {
        prior_p: mass_p / (mass_p + mass_np),
        prior_np: mass_np / (mass_p + mass_np),
        p_params: fit(Label::P),
        np_params: fit(Label::NP),
    })
}
