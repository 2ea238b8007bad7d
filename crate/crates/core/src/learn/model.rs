use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::bayes::{train_bayes_weighted, BayesModel};
use super::cost::CostSpec;
use super::forest::{train_forest_weighted, ForestModel, ForestParams};
use super::LearnError;
use crate::dataset::{Dataset, Label, Schema};

/// Bumped whenever the serialized model layout changes.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Which classifier to fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LearnerSpec {
    Forest(ForestParams),
    Bayes,
    /// Always scores the training majority class; a baseline.
    Majority,
}

impl LearnerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::Forest(_) => "forest",
            LearnerSpec::Bayes => "bayes",
            LearnerSpec::Majority => "majority",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classifier {
    Forest(ForestModel),
    Bayes(BayesModel),
    /// Constant P(P).
    Majority { p: f64 },
}

impl Classifier {
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            Classifier::Forest(f) => f.predict_proba(x),
            Classifier::Bayes(b) => b.predict_proba(x),
            Classifier::Majority { p } => *p,
        }
    }
}

/// Fits `spec` on `train`, applying the cost spec's class weights.
pub fn fit(spec: &LearnerSpec, train: &Dataset, cost: &CostSpec, seed: u64) -> Result<Classifier, LearnError> {
    if train.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let weights = cost.class_weights();
    Ok(match spec {
        LearnerSpec::Forest(params) => {
            Classifier::Forest(train_forest_weighted(train, params, weights, seed)?)
        }
        LearnerSpec::Bayes => Classifier::Bayes(train_bayes_weighted(train, weights)?),
        LearnerSpec::Majority => {
            let c = train.counts();
            Classifier::Majority {
                p: if c.p as f64 * weights[0] > c.np as f64 * weights[1] { 1.0 } else { 0.0 },
            }
        }
    })
}

/// A trained classifier bundled with everything needed to apply it later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub schema: Schema,
    pub seed: u64,
    pub cost: CostSpec,
    pub classifier: Classifier,
}

impl Model {
    pub fn train(spec: &LearnerSpec, train: &Dataset, cost: CostSpec, seed: u64) -> Result<Model, LearnError> {
        Ok(Model {
            format_version: MODEL_FORMAT_VERSION,
            schema: train.schema().clone(),
            seed,
            cost,
            classifier: fit(spec, train, &cost, seed)?,
        })
    }

    pub fn check_schema(&self, schema: &Schema) -> Result<(), LearnError> {
        if &self.schema != schema {
            return Err(LearnError::SchemaMismatch {
                expected: describe(&self.schema),
                found: describe(schema),
            });
        }
        Ok(())
    }

    /// P(P) for a row laid out per the model's schema.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        if x.len() != self.schema.len() {
            return Err(LearnError::SchemaMismatch {
                expected: describe(&self.schema),
                found: format!("a row of {} values", x.len()),
            });
        }
        Ok(self.classifier.predict_proba(x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label, LearnError> {
        Ok(self.cost.decide(self.predict_proba(x)?))
    }

    pub fn write_json<W: Write>(&self, writer: W) -> Result<(), LearnError> {
        serde_json::to_writer(writer, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(reader: R) -> Result<Model, LearnError> {
        let model: Model = serde_json::from_reader(reader)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnError::ModelFormat(format!(
                "model format {} is not supported (expected {})",
                model.format_version, MODEL_FORMAT_VERSION
            )));
        }
        Ok(model)
    }
}

fn describe(schema: &Schema) -> String {
    format!("schema {} with {} columns", schema.version, schema.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Instance;
    use crate::learn::cost::CostMatrix;

    fn data() -> Dataset {
        let instances = (0..40)
            .map(|i| Instance {
                id: i.to_string(),
                label: if i % 4 == 0 { Label::P } else { Label::NP },
                values: vec![(i % 4) as f64, i as f64],
            })
            .collect();
        Dataset::new(Schema::real("t", &["a", "b"]), instances).unwrap()
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let spec = LearnerSpec::Forest(ForestParams { n_trees: 5, ..Default::default() });
        let cost = CostSpec::threshold(CostMatrix::new(20.0, 1.0).unwrap());
        let model = Model::train(&spec, &data(), cost, 4).unwrap();
        let mut buf = Vec::new();
        model.write_json(&mut buf).unwrap();
        let back = Model::read_json(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        for inst in data().instances() {
            assert_eq!(back.predict_proba(&inst.values).unwrap(), model.predict_proba(&inst.values).unwrap());
        }
    }

    #[test]
    fn schema_mismatch() {
        let model = Model::train(&LearnerSpec::Bayes, &data(), CostSpec::default(), 0).unwrap();
        assert!(model.check_schema(&Schema::real("t", &["a", "b"])).is_ok());
        assert!(matches!(
            model.check_schema(&Schema::real("t", &["a", "c"])),
            Err(LearnError::SchemaMismatch { .. })
        ));
        assert!(model.predict_proba(&[1.0]).is_err());
    }

    #[test]
    fn majority_always_np() {
        let model = Model::train(&LearnerSpec::Majority, &data(), CostSpec::default(), 0).unwrap();
        for inst in data().instances() {
            assert_eq!(model.predict(&inst.values).unwrap(), Label::NP);
        }
    }

    #[test]
    fn unsupported_format_version() {
        let model = Model::train(&LearnerSpec::Majority, &data(), CostSpec::default(), 0).unwrap();
        let text = serde_json::to_string(&model).unwrap().replace("\"format_version\":1", "\"format_version\":99");
        assert!(matches!(Model::read_json(text.as_bytes()), Err(LearnError::ModelFormat(_))));
    }
}
