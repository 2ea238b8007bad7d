use rand::seq::index;

use super::LearnError;
use crate::dataset::{Dataset, Label};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct Undersampled {
    pub dataset: Dataset,
    pub warning: Option<String>,
}

/// Random undersampling of the majority class: keeps every P instance and
/// `⌊ratio · |P|⌋` nP instances drawn without replacement. Dataset order is preserved.
pub fn undersample(dataset: &Dataset, ratio: f64, seed: u64) -> Result<Undersampled, LearnError> {
    if !(ratio >= 1.0 && ratio.is_finite()) {
        return Err(LearnError::BadRatio(ratio));
    }
    let counts = dataset.counts();
    if counts.p == 0 || counts.np == 0 {
        return Err(LearnError::SingleClass);
    }
    let wanted = (ratio * counts.p as f64).floor() as usize;
    let negatives = dataset.indices_of(Label::NP);
    let mut warning = None;
    let mut keep: Vec<usize> = if wanted >= negatives.len() {
        if wanted > negatives.len() {
            warning = Some(format!(
                "ratio {} needs {} nP instances but only {} exist; keeping all",
                ratio,
                wanted,
                negatives.len()
            ));
        }
        negatives
    } else {
        let mut rng = seed::rng(seed);
        index::sample(&mut rng, negatives.len(), wanted)
            .into_iter()
            .map(|i| negatives[i])
            .collect()
    };
    keep.extend(dataset.indices_of(Label::P));
    keep.sort_unstable();
    Ok(Undersampled {
        dataset: dataset.subset(&keep),
        warning,
    })
}
