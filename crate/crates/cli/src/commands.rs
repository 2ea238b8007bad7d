use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use log::warn;
use ponzi_radar_core::chain::{parse_tx_log, write_tx_log, RateTable, TxLog};
use ponzi_radar_core::cluster::{build_clusters, read_seeds, ClusterSet};
use ponzi_radar_core::dataset::{assemble, read_labels, sample_background, FeatureTable};
use ponzi_radar_core::eval::{
    apply_model, cross_validate, describe_setting, render_table, write_report_csv, CvConfig, ReportRow,
};
use ponzi_radar_core::features::{feature_table, SCHEMA_VERSION};
use ponzi_radar_core::learn::{CostSpec, ForestParams, LearnerSpec, Model, TreeParams};
use ponzi_radar_core::rank::{consensus_rank, rank_features, write_rank_csv, RankMethod, RankParams};
use ponzi_radar_core::synth::{generate, SynthParams};
use ponzi_radar_core::{Dataset, Label, Schema};

use crate::{Command, LearnerArgs, LearnerKind};

pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

type Outcome = Result<ExitCode, Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn open(path: &str) -> anyhow::Result<Box<dyn BufRead>> {
    if path == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    let f = File::open(path).with_context(|| format!("cannot open {}", path))?;
    Ok(Box::new(BufReader::new(f)))
}

fn open_path(path: &Path) -> anyhow::Result<Box<dyn BufRead>> {
    open(&path.to_string_lossy())
}

fn create(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn read_log(path: &str) -> anyhow::Result<TxLog> {
    parse_tx_log(open(path)?).with_context(|| format!("reading transaction log {}", path))
}

fn read_dataset(path: &str) -> anyhow::Result<Dataset> {
    Dataset::read_csv(open(path)?, &Schema::v1()).with_context(|| format!("reading dataset {}", path))
}

fn read_clusters(path: &Path) -> anyhow::Result<ClusterSet> {
    ClusterSet::read_csv(open_path(path)?).with_context(|| format!("reading clusters {}", path.display()))
}

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Validate { log, rates } => validate(&log, rates.as_deref()),
        Command::Cluster { log, seeds, out } => cluster(&log, seeds.as_deref(), out.as_deref()),
        Command::Features { log, clusters, out } => features(&log, clusters.as_deref(), out.as_deref()),
        Command::Dataset {
            features,
            labels,
            clusters,
            background,
            seed,
            out,
        } => dataset(&features, &labels, clusters.as_deref(), background, seed, out.as_deref()),
        Command::Train {
            dataset,
            learner,
            cost,
            ratio,
            seed,
            out,
        } => train(&dataset, &learner, CostSpec { matrix: cost, mode: learner.cost_mode.into() }, ratio, seed, &out),
        Command::Cv {
            dataset,
            learner,
            cost,
            ratio,
            k,
            seed,
            per_fold,
            out,
        } => cv(&dataset, &learner, &cost, &ratio, k, seed, per_fold, out.as_deref()),
        Command::Apply {
            model,
            dataset,
            cost,
            out,
            report,
        } => apply(&model, &dataset, cost, out.as_deref(), report.as_deref()),
        Command::Rank {
            dataset,
            method,
            bins,
            neighbors,
            sample,
            top_n,
            seed,
            out,
        } => rank(&dataset, &method, RankParams { bins, neighbors, sample, seed }, top_n, out.as_deref()),
        Command::Synth {
            seed,
            n_ponzi,
            n_background,
            hard,
            labels,
            out,
        } => synth(seed, n_ponzi, n_background, hard, labels.as_deref(), out.as_deref()),
    }
}

fn validate(path: &str, rates: Option<&Path>) -> Outcome {
    let log = read_log(path)?;
    let report = log.validate();
    let mut out = io::stdout().lock();
    writeln!(out, "transactions: {}", log.len())?;
    writeln!(out, "addresses: {}", log.address_count())?;
    writeln!(out, "{}", report)?;
    if let Some(rates) = rates {
        let table = RateTable::read_csv(open_path(rates)?).with_context(|| format!("reading rates {}", rates.display()))?;
        writeln!(out, "total fees: {} USD", report.fees_usd(&log, &table)?)?;
    }
    Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cluster(path: &str, seeds: Option<&Path>, out: Option<&Path>) -> Outcome {
    let log = read_log(path)?;
    let clusters = build_clusters(&log);
    eprintln!("{} addresses in {} clusters", clusters.address_count(), clusters.len());
    if let Some(seeds) = seeds {
        let seeds = read_seeds(open_path(seeds)?)?;
        let expansion = clusters.expand_seeds(&seeds);
        for (label, set) in &expansion.clusters {
            eprintln!("seed {}: {} cluster(s)", label, set.len());
        }
        for s in &expansion.unresolved {
            warn!("seed {} address {} does not occur in the log", s.label, s.address);
        }
        for c in &expansion.collisions {
            warn!("cluster {} is claimed by seeds {}", c.cluster, c.labels.join(", "));
        }
    }
    let mut w = create(out)?;
    clusters.write_csv(&mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn features(path: &str, clusters: Option<&Path>, out: Option<&Path>) -> Outcome {
    let log = read_log(path)?;
    let clusters = match clusters {
        Some(p) => {
            let c = read_clusters(p)?;
            if let Some(a) = log.addresses().find(|a| c.cluster_of(a).is_err()) {
                return Err(anyhow!("cluster file does not cover log address {}; was it built from this log?", a).into());
            }
            c
        }
        None => build_clusters(&log),
    };
    let table = feature_table(&log, &clusters);
    let mut w = create(out)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

/// Addresses the labels file marks P.
fn positive_addresses(labels: &Path) -> anyhow::Result<Vec<String>> {
    let mut text = String::new();
    open_path(labels)?.read_to_string(&mut text)?;
    let first = text.lines().next().unwrap_or("");
    if first.trim() == "cluster_seed_address,label" {
        let rows = read_labels(text.as_bytes()).with_context(|| format!("reading labels {}", labels.display()))?;
        Ok(rows.into_iter().filter(|(_, l)| *l == Label::P).map(|(a, _)| a).collect())
    } else {
        let seeds = read_seeds(text.as_bytes()).with_context(|| format!("reading seeds {}", labels.display()))?;
        Ok(seeds.into_iter().map(|s| s.address).collect())
    }
}

fn dataset(
    features: &str,
    labels: &Path,
    clusters: Option<&Path>,
    background: Option<usize>,
    seed: u64,
    out: Option<&Path>,
) -> Outcome {
    let table = FeatureTable::read_csv(open(features)?, &Schema::v1())
        .with_context(|| format!("reading feature table {}", features))?;
    let addresses = positive_addresses(labels)?;
    let positives: BTreeSet<String> = match clusters {
        Some(p) => {
            let c = read_clusters(p)?;
            let mut ids = BTreeSet::new();
            for a in &addresses {
                match c.cluster_of(a) {
                    Ok(k) => {
                        ids.insert(c.representative(k).to_string());
                    }
                    Err(_) => warn!("labeled address {} is not in the cluster file", a),
                }
            }
            ids
        }
        None => addresses.into_iter().collect(),
    };

    let mut rows = table.rows;
    if let Some(n) = background {
        let exclude: HashSet<usize> = rows
            .iter()
            .enumerate()
            .filter(|(_, (id, _))| positives.contains(id))
            .map(|(i, _)| i)
            .collect();
        let mut keep: Vec<usize> = sample_background(rows.len(), n, seed, &exclude)?;
        keep.extend(exclude);
        keep.sort_unstable();
        let mut all: Vec<Option<(String, Vec<f64>)>> = rows.into_iter().map(Some).collect();
        rows = keep.into_iter().map(|i| all[i].take().expect("indices are unique")).collect();
    }
    let assembled = assemble(table.schema, rows, &positives)
        .map_err(|e| anyhow!("{}; if labels name member addresses, pass --clusters", e))?;
    for w in &assembled.warnings {
        warn!("{}", w);
    }
    let counts = assembled.dataset.counts();
    eprintln!("dataset: {} P, {} nP", counts.p, counts.np);
    let mut w = create(out)?;
    assembled.dataset.write_csv(&mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn learner_spec(args: &LearnerArgs) -> Result<LearnerSpec, Failure> {
    Ok(match args.learner {
        LearnerKind::Forest => {
            if args.trees == 0 {
                return usage("--trees must be at least 1");
            }
            LearnerSpec::Forest(ForestParams {
                n_trees: args.trees,
                tree: TreeParams {
                    features_per_split: args.features_per_split,
                    ..TreeParams::default()
                },
                bootstrap: true,
            })
        }
        LearnerKind::Bayes => LearnerSpec::Bayes,
        LearnerKind::Majority => LearnerSpec::Majority,
    })
}

fn ratio_option(ratio: f64) -> Result<Option<f64>, Failure> {
    if ratio == 0.0 {
        Ok(None)
    } else if ratio >= 1.0 && ratio.is_finite() {
        Ok(Some(ratio))
    } else {
        usage(format!("--ratio must be 0 (off) or at least 1, got {}", ratio))
    }
}

fn train(path: &str, args: &LearnerArgs, cost: CostSpec, ratio: f64, seed: u64, out: &Path) -> Outcome {
    let spec = learner_spec(args)?;
    let ratio = ratio_option(ratio)?;
    let mut data = read_dataset(path)?;
    if let Some(r) = ratio {
        let u = ponzi_radar_core::learn::undersample(&data, r, ponzi_radar_core::seed::derive(seed, 2))?;
        if let Some(w) = u.warning {
            warn!("{}", w);
        }
        data = u.dataset;
    }
    let model = Model::train(&spec, &data, cost, seed)?;
    let mut w = create(Some(out))?;
    model.write_json(&mut w)?;
    w.flush()?;
    let c = data.counts();
    eprintln!("trained {} on {} P / {} nP", spec.name(), c.p, c.np);
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cv(
    path: &str,
    args: &LearnerArgs,
    costs: &[ponzi_radar_core::learn::CostMatrix],
    ratios: &[f64],
    k: usize,
    seed: u64,
    per_fold: bool,
    out: Option<&Path>,
) -> Outcome {
    let learner = learner_spec(args)?;
    if k < 2 {
        return usage("--k must be at least 2");
    }
    let ratios = ratios.iter().map(|&r| ratio_option(r)).collect::<Result<Vec<_>, _>>()?;
    let data = read_dataset(path)?;
    let mut rows = Vec::new();
    let mut table_rows = Vec::new();
    for &ratio in &ratios {
        for &matrix in costs {
            let config = CvConfig {
                learner,
                ratio,
                cost: CostSpec { matrix, mode: args.cost_mode.into() },
                k,
                seed,
            };
            let result = cross_validate(&data, &config)?;
            for w in &result.warnings {
                warn!("{}", w);
            }
            let row = ReportRow {
                setting: describe_setting(&config, &data.schema().version),
                matrix: result.aggregate,
                metrics: result.metrics(),
            };
            table_rows.push(row.clone());
            if per_fold {
                for (i, m) in result.folds.iter().enumerate() {
                    table_rows.push(ReportRow {
                        setting: format!("  fold {}", i),
                        matrix: *m,
                        metrics: m.metrics(),
                    });
                }
            }
            rows.push(row);
        }
    }
    eprint!("{}", render_table(&table_rows));
    let mut w = create(out)?;
    write_report_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn apply(model_path: &Path, path: &str, cost: Option<ponzi_radar_core::learn::CostMatrix>, out: Option<&Path>, report: Option<&Path>) -> Outcome {
    let model = Model::read_json(open_path(model_path)?).with_context(|| format!("reading model {}", model_path.display()))?;
    let data = read_dataset(path)?;
    let spec = match cost {
        Some(matrix) => CostSpec { matrix, ..model.cost },
        None => model.cost,
    };
    let applied = apply_model(&model, &spec, &data)?;
    let row = ReportRow {
        setting: format!("apply cost={} seed={} schema={}", spec.matrix, model.seed, model.schema.version),
        matrix: applied.matrix,
        metrics: applied.metrics(),
    };
    eprint!("{}", render_table(std::slice::from_ref(&row)));
    if let Some(p) = report {
        let mut w = create(Some(p))?;
        write_report_csv(std::slice::from_ref(&row), &mut w)?;
        w.flush()?;
    }
    let mut w = create(out)?;
    applied.write_predictions_csv(&mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn rank(path: &str, methods: &[String], params: RankParams, top_n: usize, out: Option<&Path>) -> Outcome {
    if params.bins < 2 {
        return usage("--bins must be at least 2");
    }
    if params.neighbors == 0 {
        return usage("--neighbors must be at least 1");
    }
    let methods: Vec<RankMethod> = if methods.is_empty() {
        RankMethod::ALL.to_vec()
    } else {
        methods
            .iter()
            .map(|m| m.parse::<RankMethod>())
            .collect::<Result<_, _>>()
            .map_err(Failure::Usage)?
    };
    let data = read_dataset(path)?;
    let rankings: Vec<_> = methods.iter().map(|&m| rank_features(&data, m, &params)).collect();
    for r in &rankings {
        if let Some(note) = &r.note {
            warn!("{}: {}", r.method, note);
        }
    }
    let consensus = consensus_rank(&rankings, top_n);
    eprintln!("consensus (top {} appearances, mean rank):", top_n);
    for (i, c) in consensus.iter().enumerate() {
        eprintln!("{:>3}. {:<24} {} {:.2}", i + 1, c.feature, c.count, c.mean_rank);
    }
    let mut w = create(out)?;
    write_rank_csv(&rankings, &consensus, &mut w)?;
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn synth(seed: u64, n_ponzi: usize, n_background: usize, hard: bool, labels: Option<&Path>, out: Option<&Path>) -> Outcome {
    let base = if hard { SynthParams::hard() } else { SynthParams::default() };
    let params = SynthParams {
        seed,
        n_ponzi,
        n_background,
        ..base
    };
    let generated = generate(&params)?;
    if let Some(p) = labels {
        let mut w = create(Some(p))?;
        generated.write_labels_csv(&mut w)?;
        w.flush()?;
    } else {
        warn!("no --labels path given; class labels are not written");
    }
    let mut w = create(out)?;
    write_tx_log(&generated.log, &mut w)?;
    w.flush()?;
    eprintln!(
        "generated {} transactions for {} schemes and {} background wallets (schema {})",
        generated.log.len(),
        n_ponzi,
        n_background,
        SCHEMA_VERSION
    );
    Ok(ExitCode::SUCCESS)
}
