use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::dataset::Label;

/// Misclassification costs with P as the positive class; correct predictions cost nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    /// Cost of predicting nP for an actual P.
    c_fn: f64,
    /// Cost of predicting P for an actual nP.
    c_fp: f64,
}

impl CostMatrix {
    pub fn new(c_fn: f64, c_fp: f64) -> Result<Self, LearnError> {
        if !(c_fn > 0.0 && c_fp > 0.0 && c_fn.is_finite() && c_fp.is_finite()) {
            return Err(LearnError::InvalidCost(format!(
                "costs must be positive and finite, got {}:{}",
                c_fn, c_fp
            )));
        }
        Ok(CostMatrix { c_fn, c_fp })
    }

    /// A false negative costs `factor` times a false positive (CM5, CM10, ... for 5, 10, ...).
    pub fn false_negative_weighted(factor: f64) -> Result<Self, LearnError> {
        CostMatrix::new(factor, 1.0)
    }

    pub fn symmetric() -> Self {
        CostMatrix { c_fn: 1.0, c_fp: 1.0 }
    }

    pub fn c_fn(&self) -> f64 {
        self.c_fn
    }

    pub fn c_fp(&self) -> f64 {
        self.c_fp
    }

    /// Minimum-expected-cost threshold on P(P): predict P iff `p ≥ c_fp / (c_fp + c_fn)`.
    pub fn threshold(&self) -> f64 {
        self.c_fp / (self.c_fp + self.c_fn)
    }
}

impl Default for CostMatrix {
    fn default() -> Self {
        CostMatrix::symmetric()
    }
}

impl fmt::Display for CostMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.c_fn, self.c_fp)
    }
}

impl FromStr for CostMatrix {
    type Err = LearnError;

    /// Parses `c_fn:c_fp`, e.g. `20:1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LearnError::InvalidCost(format!("expected <fn>:<fp>, got {:?}", s));
        let (c_fn, c_fp) = s.split_once(':').ok_or_else(bad)?;
        let c_fn: f64 = c_fn.trim().parse().map_err(|_| bad())?;
        let c_fp: f64 = c_fp.trim().parse().map_err(|_| bad())?;
        CostMatrix::new(c_fn, c_fp)
    }
}

/// How misclassification costs enter the classifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostMode {
    /// Train cost-blind and threshold P(P) at the minimum-expected-cost point.
    #[default]
    Threshold,
    /// Weight P training instances by `c_fn / c_fp` and threshold at 0.5.
    Reweight,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub matrix: CostMatrix,
    pub mode: CostMode,
}

impl CostSpec {
    pub fn threshold(matrix: CostMatrix) -> Self {
        CostSpec {
            matrix,
            mode: CostMode::Threshold,
        }
    }

    /// Per-class training weights `[P, nP]`.
    pub fn class_weights(&self) -> [f64; 2] {
        match self.mode {
            CostMode::Threshold => [1.0, 1.0],
            CostMode::Reweight => [self.matrix.c_fn / self.matrix.c_fp, 1.0],
        }
    }

    pub fn decide(&self, p: f64) -> Label {
        match self.mode {
            CostMode::Threshold => cost_sensitive_predict(p, &self.matrix),
            CostMode::Reweight => cost_sensitive_predict(p, &CostMatrix::symmetric()),
        }
    }
}

/// Minimum expected cost decision; ties go to P.
pub fn cost_sensitive_predict(p: f64, cm: &CostMatrix) -> Label {
    if p >= cm.threshold() {
        Label::P
    } else {
        Label::NP
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cm20_threshold() {
        let cm: CostMatrix = "20:1".parse().unwrap();
        assert_eq!(cm.threshold(), 1.0 / 21.0);
        assert!((cm.threshold() - 0.047619).abs() < 1e-6);
        assert_eq!(cost_sensitive_predict(0.05, &cm), Label::P);
        assert_eq!(cost_sensitive_predict(0.04, &cm), Label::NP);
    }

    #[test]
    fn symmetric_is_half() {
        let cm = CostMatrix::new(3.0, 3.0).unwrap();
        assert_eq!(cm.threshold(), 0.5);
        assert_eq!(cost_sensitive_predict(0.5, &cm), Label::P);
        assert_eq!(cost_sensitive_predict(0.4999, &cm), Label::NP);
    }

    #[test]
    fn zero_probability_is_never_p() {
        for (f, p) in [(1.0, 1.0), (40.0, 1.0), (1e6, 1.0), (1.0, 1e6)] {
            let cm = CostMatrix::new(f, p).unwrap();
            assert_eq!(cost_sensitive_predict(0.0, &cm), Label::NP);
        }
    }

    #[test]
    fn invalid_costs() {
        assert!("0:1".parse::<CostMatrix>().is_err());
        assert!("5".parse::<CostMatrix>().is_err());
        assert!("a:b".parse::<CostMatrix>().is_err());
        assert!(CostMatrix::new(f64::INFINITY, 1.0).is_err());
    }

    #[test]
    fn display_round_trip() {
        let cm = CostMatrix::new(20.0, 1.0).unwrap();
        assert_eq!(cm.to_string(), "20:1");
        assert_eq!(cm.to_string().parse::<CostMatrix>().unwrap(), cm);
    }

    #[test]
    fn reweight_weights() {
        let spec = CostSpec {
            matrix: CostMatrix::new(10.0, 2.0).unwrap(),
            mode: CostMode::Reweight,
        };
        assert_eq!(spec.class_weights(), [5.0, 1.0]);
        assert_eq!(spec.decide(0.5), Label::P);
        assert_eq!(spec.decide(0.2), Label::NP);
    }
}
