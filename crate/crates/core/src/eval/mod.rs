//! Cross-validation, confusion matrices and the reported metrics.

pub mod cv;
pub mod metrics;
pub mod report;

pub use cv::{apply_model, cross_validate, stratified_folds, Applied, CvConfig, CvResult, Prediction, Scored};
pub use metrics::{metrics_from_confusion, roc_auc, roc_auc_trapezoid, ConfusionMatrix, MetricsReport};
pub use report::{describe_setting, format_metric, render_table, write_report_csv, ReportRow};

use thiserror::Error;

use crate::learn::LearnError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("K must be at least 2, got {0}")]
    BadK(usize),
    #[error("cannot make {k} folds from {n} instances")]
    TooManyFolds { k: usize, n: usize },
    #[error("training data for fold {fold} has no P instances")]
    NoPositivesInTraining { fold: usize },
    #[error("AUC needs at least one P and one nP score")]
    SingleClassScores,
    #[error("score is NaN")]
    NanScore,
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("report: {0}")]
    Csv(#[from] csv::Error),
}
