mod common;

use ponzi_radar_core::eval::{cross_validate, roc_auc, roc_auc_trapezoid, stratified_folds, ConfusionMatrix, CvConfig};
use ponzi_radar_core::learn::{CostMatrix, CostSpec, ForestParams, LearnerSpec};
use ponzi_radar_core::Label;
use proptest::prelude::*;

#[test]
fn metric_identities_hold_on_every_small_matrix() {
    for tp in 0..=50u64 {
        for fn_ in 0..=50u64 {
            for fp in 0..=50u64 {
                for tn in 0..=50u64 {
                    let cm = ConfusionMatrix::new(tp, fn_, fp, tn);
                    let m = cm.metrics();
                    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
                    match m.recall {
                        Some(r) => assert!(close(r * (tp + fn_) as f64, tp as f64)),
                        None => assert_eq!(tp + fn_, 0),
                    }
                    match m.specificity {
                        Some(s) => assert!(close(s * (fp + tn) as f64, tn as f64)),
                        None => assert_eq!(fp + tn, 0),
                    }
                    match m.precision {
                        Some(p) => assert!(close(p * (tp + fp) as f64, tp as f64)),
                        None => assert_eq!(tp + fp, 0),
                    }
                    match m.accuracy {
                        Some(a) => assert!(close(a * cm.total() as f64, (tp + tn) as f64)),
                        None => assert_eq!(cm.total(), 0),
                    }
                    if let Some(f) = m.f_measure {
                        // F = 2tp / (2tp + fp + fn)
                        assert!(close(f * (2 * tp + fp + fn_) as f64, (2 * tp) as f64));
                    } else {
                        assert!(tp == 0);
                    }
                    if let (Some(g), Some(r), Some(s)) = (m.g_mean, m.recall, m.specificity) {
                        assert!(close(g * g, r * s));
                    }
                }
            }
        }
    }
}

fn scores() -> impl Strategy<Value = Vec<(f64, Label)>> {
    // a coarse score grid forces ties
    prop::collection::vec((0u8..12, any::<bool>()), 2..300).prop_map(|v| {
        v.into_iter()
            .map(|(s, p)| (s as f64 / 11.0, if p { Label::P } else { Label::NP }))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn auc_implementations_agree(s in scores()) {
        let has_both = s.iter().any(|x| x.1 == Label::P) && s.iter().any(|x| x.1 == Label::NP);
        prop_assume!(has_both);
        let mw = roc_auc(&s).unwrap();
        let trap = roc_auc_trapezoid(&s).unwrap();
        prop_assert!((mw - trap).abs() < 1e-12, "{} vs {}", mw, trap);
        prop_assert!((mw - common::pairwise_auc(&s)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn folds_partition_and_stratify(seed in any::<u64>(), n in 10usize..400, p_frac in 0.01f64..0.99, k in prop::sample::select(vec![2usize, 5, 10])) {
        let p = ((n as f64 * p_frac) as usize).max(1);
        let d = common::random_dataset(seed, n, p, 1);
        let folds = stratified_folds(&d, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        for label in [Label::P, Label::NP] {
            let per: Vec<usize> = folds
                .iter()
                .map(|f| f.iter().filter(|&&i| d.instances()[i].label == label).count())
                .collect();
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }
}

#[test]
fn fold_matrices_sum_to_the_aggregate() {
    let d = common::random_dataset(3, 300, 30, 4);
    for (spec, ratio) in [
        (LearnerSpec::Forest(ForestParams { n_trees: 10, ..Default::default() }), None),
        (LearnerSpec::Bayes, Some(2.0)),
        (LearnerSpec::Majority, None),
    ] {
        let config = CvConfig {
            learner: spec,
            ratio,
            cost: CostSpec::threshold(CostMatrix::new(5.0, 1.0).unwrap()),
            k: 5,
            seed: 9,
        };
        let r = cross_validate(&d, &config).unwrap();
        let sum: ConfusionMatrix = r.folds.iter().copied().sum();
        assert_eq!(sum, r.aggregate);
        assert_eq!(r.aggregate.total() as usize, d.len());
        let indices: Vec<usize> = r.scores.iter().map(|s| s.index).collect();
        assert_eq!(indices, (0..d.len()).collect::<Vec<_>>());
    }
}
