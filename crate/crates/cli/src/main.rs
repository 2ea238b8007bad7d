//! `ponzi-radar`: the detection pipeline, one subcommand per stage.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ponzi_radar_core::learn::{CostMatrix, CostMode};

#[derive(Debug, Parser)]
#[command(name = "ponzi-radar", version, about = "Detect Ponzi schemes in a Bitcoin transaction log")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a transaction log for dangling inputs, double spends and negative fees.
    Validate {
        /// Transaction log (`-` for stdin).
        log: String,
        /// `date,usd_per_btc` table; adds the USD value of all fees.
        #[arg(long)]
        rates: Option<PathBuf>,
    },
    /// Group addresses with the multi-input heuristic.
    Cluster {
        log: String,
        /// `label,address` seed file to resolve against the clusters.
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Compute the per-cluster feature table.
    Features {
        log: String,
        /// Cluster dump from `cluster`; clusters the log itself when absent.
        #[arg(long)]
        clusters: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Label a feature table and optionally sample nP clusters.
    Dataset {
        features: String,
        /// `cluster_seed_address,label` file, or a `label,address` seed file whose entries are all P.
        #[arg(long)]
        labels: PathBuf,
        /// Cluster dump used to map labeled addresses to their clusters.
        #[arg(long)]
        clusters: Option<PathBuf>,
        /// Keep only this many randomly chosen nP clusters.
        #[arg(long)]
        background: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train a classifier and save it as JSON.
    Train {
        dataset: String,
        #[command(flatten)]
        learner: LearnerArgs,
        #[arg(long, default_value = "1:1")]
        cost: CostMatrix,
        /// nP:P undersampling ratio; 0 keeps every instance.
        #[arg(long, default_value_t = 0.0)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Stratified K-fold cross-validation over a sweep of costs and ratios.
    Cv {
        dataset: String,
        #[command(flatten)]
        learner: LearnerArgs,
        /// Cost matrix `c_fn:c_fp`; repeat to sweep.
        #[arg(long, default_values = ["1:1"])]
        cost: Vec<CostMatrix>,
        /// nP:P undersampling ratio for training folds, 0 = off; repeat to sweep.
        #[arg(long, default_values_t = [0.0])]
        ratio: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also print each fold's matrix in the terminal table.
        #[arg(long)]
        per_fold: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score a dataset with a saved model.
    Apply {
        #[arg(long)]
        model: PathBuf,
        dataset: String,
        /// Overrides the cost matrix stored with the model.
        #[arg(long)]
        cost: Option<CostMatrix>,
        /// Per-instance predictions CSV.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Metrics report CSV.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Rank features by relevance and report their consensus.
    Rank {
        dataset: String,
        /// Ranker to run; repeat for several. Default: all five.
        #[arg(long)]
        method: Vec<String>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// ReliefF neighbors.
        #[arg(long, default_value_t = 10)]
        neighbors: usize,
        /// ReliefF sample size (default: every instance).
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 8)]
        top_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Generate a labeled synthetic transaction log.
    Synth {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        n_ponzi: usize,
        #[arg(long, default_value_t = 6000)]
        n_background: usize,
        /// Overlapping class distributions.
        #[arg(long)]
        hard: bool,
        /// Where to write `cluster_seed_address,label`.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LearnerKind {
    Forest,
    Bayes,
    Majority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostModeArg {
    /// Train cost-blind, move the decision threshold.
    Threshold,
    /// Weight P instances by c_fn/c_fp during training.
    Reweight,
}

impl From<CostModeArg> for CostMode {
    fn from(m: CostModeArg) -> Self {
        match m {
            CostModeArg::Threshold => CostMode::Threshold,
            CostModeArg::Reweight => CostMode::Reweight,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct LearnerArgs {
    #[arg(long, value_enum, default_value_t = LearnerKind::Forest)]
    pub learner: LearnerKind,
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Features tried per split (default ⌊log2 F⌋ + 1).
    #[arg(long)]
    pub features_per_split: Option<usize>,
    #[arg(long, value_enum, default_value_t = CostModeArg::Threshold)]
    pub cost_mode: CostModeArg,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PONZI_RADAR_LOG", "warn")).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {}", e);
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command) {
        Ok(code) => code,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
        Err(commands::Failure::Data(e)) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
