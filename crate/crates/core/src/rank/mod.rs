//! Feature relevance rankings and their consensus.

pub mod entropy;
pub mod relief;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

pub use entropy::{discretize, gain_ratio, info_gain, one_r, sym_uncertainty, DEFAULT_BINS};
pub use relief::{relieff, ReliefWeights, DEFAULT_NEIGHBORS};

use crate::dataset::{format_value, Dataset};

pub const DEFAULT_TOP_N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankMethod {
    InfoGain,
    GainRatio,
    SymUncertainty,
    OneR,
    ReliefF,
}

impl RankMethod {
    pub const ALL: [RankMethod; 5] = [
        RankMethod::InfoGain,
        RankMethod::GainRatio,
        RankMethod::SymUncertainty,
        RankMethod::OneR,
        RankMethod::ReliefF,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RankMethod::InfoGain => "info_gain",
            RankMethod::GainRatio => "gain_ratio",
            RankMethod::SymUncertainty => "sym_uncertainty",
            RankMethod::OneR => "one_r",
            RankMethod::ReliefF => "relieff",
        }
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RankMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RankMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown ranker `{}` (expected one of info_gain, gain_ratio, sym_uncertainty, one_r, relieff)", s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankParams {
    pub bins: usize,
    pub neighbors: usize,
    /// ReliefF sample size; `None` uses every instance.
    pub sample: Option<usize>,
    pub seed: u64,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            bins: DEFAULT_BINS,
            neighbors: DEFAULT_NEIGHBORS,
            sample: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub feature: String,
    /// Position in the schema.
    pub column: usize,
    pub score: f64,
}

/// Every feature once, best first; equal scores keep schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub method: RankMethod,
    pub entries: Vec<RankEntry>,
    pub note: Option<String>,
}

impl Ranking {
    pub fn from_scores(method: RankMethod, names: &[String], scores: &[f64]) -> Ranking {
        let mut entries: Vec<RankEntry> = names
            .iter()
            .zip(scores)
            .enumerate()
            .map(|(column, (feature, &score))| RankEntry {
                feature: feature.clone(),
                column,
                score,
            })
            .collect();
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.column.cmp(&b.column)));
        Ranking { method, entries, note: None }
    }

    /// 1-based position of schema column `column`.
    pub fn position(&self, column: usize) -> usize {
        self.entries.iter().position(|e| e.column == column).map_or(usize::MAX, |p| p + 1)
    }
}

pub fn rank_features(dataset: &Dataset, method: RankMethod, params: &RankParams) -> Ranking {
    let names: Vec<String> = dataset.schema().names().map(str::to_string).collect();
    if method == RankMethod::ReliefF {
        let r = relieff(dataset, params.neighbors, params.sample, params.seed);
        let mut ranking = Ranking::from_scores(method, &names, &r.weights);
        ranking.note = r.note;
        return ranking;
    }
    let labels = dataset.labels();
    let score = match method {
        RankMethod::InfoGain => info_gain,
        RankMethod::GainRatio => gain_ratio,
        RankMethod::SymUncertainty => sym_uncertainty,
        RankMethod::OneR => one_r,
        RankMethod::ReliefF => unreachable!(),
    };
    let scores: Vec<f64> = (0..names.len())
        .into_par_iter()
        .map(|f| score(&discretize(&dataset.column(f), params.bins), &labels))
        .collect();
    Ranking::from_scores(method, &names, &scores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusEntry {
    pub feature: String,
    pub column: usize,
    /// Number of rankings placing the feature within their top `n`.
    pub count: usize,
    pub mean_rank: f64,
}

/// All features ordered by top-`n` appearances, then mean rank, then schema order.
pub fn consensus_rank(rankings: &[Ranking], top_n: usize) -> Vec<ConsensusEntry> {
    let Some(first) = rankings.first() else {
        return Vec::new();
    };
    let mut by_column: Vec<&RankEntry> = first.entries.iter().collect();
    by_column.sort_by_key(|e| e.column);
    let mut out: Vec<ConsensusEntry> = by_column
        .into_iter()
        .map(|e| {
            let positions: Vec<usize> = rankings.iter().map(|r| r.position(e.column)).collect();
            ConsensusEntry {
                feature: e.feature.clone(),
                column: e.column,
                count: positions.iter().filter(|&&p| p <= top_n).count(),
                mean_rank: positions.iter().sum::<usize>() as f64 / positions.len() as f64,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then(a.mean_rank.total_cmp(&b.mean_rank))
            .then(a.column.cmp(&b.column))
    });
    out
}

/// `method,feature,score,rank` for every ranking, followed by `consensus` rows whose
/// score is the top-`n` appearance count.
pub fn write_rank_csv<W: Write>(rankings: &[Ranking], consensus: &[ConsensusEntry], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["method", "feature", "score", "rank"])?;
    for r in rankings {
        for (i, e) in r.entries.iter().enumerate() {
            w.write_record([r.method.name(), &e.feature, &format_value(e.score, false), &(i + 1).to_string()])?;
        }
    }
    for (i, c) in consensus.iter().enumerate() {
        w.write_record(["consensus", &c.feature, &c.count.to_string(), &(i + 1).to_string()])?;
    }
    w.flush()?;
    Ok(())
}
