//! Classifiers and class-imbalance handling.

pub mod bayes;
pub mod cost;
pub mod forest;
pub mod model;
pub mod sampling;
pub mod tree;

pub use bayes::{train_bayes, BayesModel};
pub use cost::{cost_sensitive_predict, CostMatrix, CostMode, CostSpec};
pub use forest::{train_forest, ForestModel, ForestParams};
pub use model::{fit, Classifier, LearnerSpec, Model};
pub use sampling::{undersample, Undersampled};
pub use tree::{train_tree, TreeModel, TreeParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("cannot train on an empty dataset")]
    EmptyDataset,
    #[error("training data must contain both P and nP instances")]
    SingleClass,
    #[error("undersampling ratio must be >= 1, got {0}")]
    BadRatio(f64),
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
    #[error("feature schema mismatch: model expects {expected}, got {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("{0}")]
    ModelFormat(String),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}
