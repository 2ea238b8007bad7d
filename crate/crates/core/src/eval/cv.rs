use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{roc_auc, ConfusionMatrix, MetricsReport};
use super::EvalError;
use crate::dataset::{Dataset, Label};
use crate::learn::{fit, undersample, CostSpec, LearnerSpec, Model};
use crate::seed;

const FOLD_STREAM: u64 = 0;
const TRAIN_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;

/// Partitions `0..dataset.len()` into `k` folds. Each class is shuffled and dealt
/// round-robin; the dealing position carries over from P to nP so fold sizes stay balanced.
pub fn stratified_folds(dataset: &Dataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::BadK(k));
    }
    if k > dataset.len() {
        return Err(EvalError::TooManyFolds { k, n: dataset.len() });
    }
    let mut rng = seed::rng(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for label in [Label::P, Label::NP] {
        let mut idx = dataset.indices_of(label);
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub learner: LearnerSpec,
    /// nP:P undersampling ratio applied to each training fold; `None` keeps all rows.
    pub ratio: Option<f64>,
    pub cost: CostSpec,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub index: usize,
    pub fold: usize,
    pub score: f64,
    pub label: Label,
    pub predicted: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub aggregate: ConfusionMatrix,
    pub folds: Vec<ConfusionMatrix>,
    /// Every instance exactly once, in dataset order.
    pub scores: Vec<Scored>,
    pub warnings: Vec<String>,
}

impl CvResult {
    /// Metrics of the summed matrix, with AUC over the pooled scores.
    pub fn metrics(&self) -> MetricsReport {
        let mut m = self.aggregate.metrics();
        let pooled: Vec<(f64, Label)> = self.scores.iter().map(|s| (s.score, s.label)).collect();
        m.auc = roc_auc(&pooled).ok();
        m
    }
}

struct FoldOutcome {
    matrix: ConfusionMatrix,
    scores: Vec<Scored>,
    warning: Option<String>,
}

pub fn cross_validate(dataset: &Dataset, config: &CvConfig) -> Result<CvResult, EvalError> {
    let folds = stratified_folds(dataset, config.k, seed::derive(config.seed, FOLD_STREAM))?;
    let train_seed = seed::derive(config.seed, TRAIN_STREAM);
    let sample_seed = seed::derive(config.seed, SAMPLE_STREAM);
    let mut fold_of = vec![0; dataset.len()];
    for (f, fold) in folds.iter().enumerate() {
        for &i in fold {
            fold_of[i] = f;
        }
    }

    let outcomes: Vec<Result<FoldOutcome, EvalError>> = (0..folds.len())
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..dataset.len()).filter(|&i| fold_of[i] != f).collect();
            let mut train = dataset.subset(&train_idx);
            if train.counts().p == 0 {
                return Err(EvalError::NoPositivesInTraining { fold: f });
            }
            let mut warning = None;
            if let Some(ratio) = config.ratio {
                let u = undersample(&train, ratio, seed::derive(sample_seed, f as u64))?;
                train = u.dataset;
                warning = u.warning.map(|w| format!("fold {}: {}", f, w));
            }
            let model = fit(&config.learner, &train, &config.cost, seed::derive(train_seed, f as u64))?;
            let mut matrix = ConfusionMatrix::default();
            let scores = folds[f]
                .iter()
                .map(|&i| {
                    let inst = &dataset.instances()[i];
                    let score = model.predict_proba(&inst.values);
                    let predicted = config.cost.decide(score);
                    matrix.record(inst.label, predicted);
                    Scored {
                        index: i,
                        fold: f,
                        score,
                        label: inst.label,
                        predicted,
                    }
                })
                .collect();
            Ok(FoldOutcome { matrix, scores, warning })
        })
        .collect();

    let mut result = CvResult {
        aggregate: ConfusionMatrix::default(),
        folds: Vec::with_capacity(folds.len()),
        scores: Vec::with_capacity(dataset.len()),
        warnings: Vec::new(),
    };
    for outcome in outcomes {
        let outcome = outcome?;
        result.aggregate += outcome.matrix;
        result.folds.push(outcome.matrix);
        result.scores.extend(outcome.scores);
        result.warnings.extend(outcome.warning);
    }
    result.scores.sort_by_key(|s| s.index);
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub label: Label,
    pub score: f64,
    pub predicted: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub matrix: ConfusionMatrix,
    pub predictions: Vec<Prediction>,
}

impl Applied {
    pub fn metrics(&self) -> MetricsReport {
        let mut m = self.matrix.metrics();
        let scored: Vec<(f64, Label)> = self.predictions.iter().map(|p| (p.score, p.label)).collect();
        m.auc = roc_auc(&scored).ok();
        m
    }

    pub fn write_predictions_csv<W: std::io::Write>(&self, writer: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "label", "score", "predicted"])?;
        for p in &self.predictions {
            w.write_record([
                p.id.clone(),
                p.label.to_string(),
                format!("{:.16e}", p.score),
                p.predicted.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Scores every instance with a frozen model and applies `cost`'s decision rule.
pub fn apply_model(model: &Model, cost: &CostSpec, dataset: &Dataset) -> Result<Applied, EvalError> {
    model.check_schema(dataset.schema())?;
    let mut matrix = ConfusionMatrix::default();
    let predictions = dataset
        .instances()
        .iter()
        .map(|inst| {
            let score = model.classifier.predict_proba(&inst.values);
            let predicted = cost.decide(score);
            matrix.record(inst.label, predicted);
            Prediction {
                id: inst.id.clone(),
                label: inst.label,
                score,
                predicted,
            }
        })
        .collect();
    Ok(Applied { matrix, predictions })
}
