use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Columns, TreeModel, TreeParams};
use super::LearnError;
use crate::dataset::Dataset;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            tree: TreeParams::default(),
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub params: ForestParams,
    pub seed: u64,
}

impl ForestModel {
    /// Mean of the trees' leaf P-frequencies, summed in tree order.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        let total: f64 = self.trees.iter().map(|t| t.predict_proba(x)).sum();
        total / self.trees.len() as f64
    }
}

pub fn train_forest(dataset: &Dataset, params: &ForestParams, seed: u64) -> Result<ForestModel, LearnError> {
    train_forest_weighted(dataset, params, [1.0, 1.0], seed)
}

/// Tree `i` draws from its own stream `seed::derive(seed, i)`, so the result
/// does not depend on how trees are scheduled across threads.
pub fn train_forest_weighted(
    dataset: &Dataset,
    params: &ForestParams,
    weights: [f64; 2],
    seed: u64,
) -> Result<ForestModel, LearnError> {
    if dataset.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let data = Columns::new(dataset);
    let n = data.rows();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng(seed::derive(seed, i as u64));
            let sample: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(&data, sample, &params.tree, weights, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        trees,
        params: *params,
        seed,
    })
}
