//! Brute-force oracles and random fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use ponzi_radar_core::chain::{OutPoint, Transaction, TxLog, TxOut, Txid};
use ponzi_radar_core::Label;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn txid(n: u64) -> Txid {
    let mut b = [0u8; 32];
    b[..8].copy_from_slice(&n.to_be_bytes());
    b[31] = 1;
    Txid(b)
}

/// A valid log of `n_tx` transactions over an address pool of `n_addr`.
/// Each non-coinbase transaction spends one to three unspent outputs.
pub fn random_log(seed: u64, n_tx: usize, n_addr: usize) -> TxLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unspent: Vec<(OutPoint, u64)> = Vec::new();
    let mut txs = Vec::with_capacity(n_tx);
    for i in 0..n_tx {
        let coinbase = unspent.is_empty() || rng.random_bool(0.2);
        let mut inputs = Vec::new();
        let mut total = 0u64;
        if coinbase {
            total = rng.random_range(1_000..100_000);
        } else {
            for _ in 0..rng.random_range(1..=3usize).min(unspent.len()) {
                let (op, v) = unspent.swap_remove(rng.random_range(0..unspent.len()));
                inputs.push(op);
                total += v;
            }
        }
        let n_out = rng.random_range(1..=3u64).min(total);
        let fee = if coinbase { 0 } else { rng.random_range(0..=total - n_out) };
        let spend = total - fee;
        let outputs: Vec<TxOut> = (0..n_out)
            .map(|k| TxOut {
                address: format!("a{:04}", rng.random_range(0..n_addr)),
                value: spend / n_out + if k == 0 { spend % n_out } else { 0 },
            })
            .collect();
        let id = txid(i as u64);
        for (k, o) in outputs.iter().enumerate() {
            unspent.push((OutPoint { txid: id, index: k as u32 }, o.value));
        }
        txs.push(Transaction {
            txid: id,
            timestamp: 1_000_000 + i as i64 * 60,
            coinbase,
            inputs,
            outputs,
        });
    }
    TxLog::from_transactions(txs).unwrap()
}

/// Connected components of the co-spend graph by breadth-first search:
/// every address mapped to the smallest address in its component.
pub fn bfs_components(log: &TxLog) -> HashMap<String, String> {
    let mut out_addr: HashMap<(Txid, u32), String> = HashMap::new();
    let mut nodes: HashSet<String> = HashSet::new();
    for tx in log.transactions() {
        for (i, o) in tx.outputs.iter().enumerate() {
            out_addr.insert((tx.txid, i as u32), o.address.clone());
            nodes.insert(o.address.clone());
        }
    }
    let mut adj: HashMap<String, Vec<String>> = HashMap::new();
    for tx in log.transactions() {
        let ins: Vec<&String> = tx
            .inputs
            .iter()
            .filter_map(|op| out_addr.get(&(op.txid, op.index)))
            .collect();
        for a in &ins {
            for b in &ins {
                if a != b {
                    adj.entry((*a).clone()).or_default().push((*b).clone());
                }
            }
        }
    }
    let mut comp: HashMap<String, String> = HashMap::new();
    let mut sorted: Vec<&String> = nodes.iter().collect();
    sorted.sort();
    for start in sorted {
        if comp.contains_key(start) {
            continue;
        }
        let mut queue = VecDeque::from([start.clone()]);
        comp.insert(start.clone(), start.clone());
        while let Some(a) = queue.pop_front() {
            for b in adj.get(&a).into_iter().flatten() {
                if !comp.contains_key(b) {
                    comp.insert(b.clone(), start.clone());
                    queue.push_back(b.clone());
                }
            }
        }
    }
    comp
}

/// Mean absolute difference over all ordered pairs, divided by twice the mean.
pub fn pairwise_gini(x: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let sum: f64 = x.iter().sum();
    if x.is_empty() || sum == 0.0 {
        return None;
    }
    let mut diff = 0.0;
    for a in x {
        for b in x {
            diff += (a - b).abs();
        }
    }
    Some(diff / (2.0 * n * sum))
}

/// Fraction of (P, nP) pairs where P scores higher, ties counting one half.
pub fn pairwise_auc(scored: &[(f64, Label)]) -> f64 {
    let pos: Vec<f64> = scored.iter().filter(|s| s.1 == Label::P).map(|s| s.0).collect();
    let neg: Vec<f64> = scored.iter().filter(|s| s.1 == Label::NP).map(|s| s.0).collect();
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

fn h(probs: impl Iterator<Item = f64>) -> f64 {
    probs.filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

/// Mutual information from the joint probability table.
pub fn brute_info_gain(x: &[usize], y: &[Label]) -> f64 {
    let n = x.len() as f64;
    let mut joint: BTreeMap<(usize, bool), f64> = BTreeMap::new();
    let mut px: BTreeMap<usize, f64> = BTreeMap::new();
    let mut py: BTreeMap<bool, f64> = BTreeMap::new();
    for (&a, &b) in x.iter().zip(y) {
        let b = b == Label::P;
        *joint.entry((a, b)).or_default() += 1.0 / n;
        *px.entry(a).or_default() += 1.0 / n;
        *py.entry(b).or_default() += 1.0 / n;
    }
    let hx = h(px.values().copied());
    let hy = h(py.values().copied());
    let hxy = h(joint.values().copied());
    hx + hy - hxy
}

/// `n` instances with `p` positives, features drawn from class-shifted uniforms.
pub fn random_dataset(seed: u64, n: usize, p: usize, n_features: usize) -> ponzi_radar_core::Dataset {
    use ponzi_radar_core::dataset::Instance;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n_features).map(|f| format!("f{}", f)).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let instances = (0..n)
        .map(|i| {
            let label = if i < p { Label::P } else { Label::NP };
            let shift = if label == Label::P { 0.5 } else { 0.0 };
            Instance {
                id: format!("i{:05}", i),
                label,
                values: (0..n_features).map(|_| (rng.random::<f64>() + shift) * 10.0).collect(),
            }
        })
        .collect();
    ponzi_radar_core::Dataset::new(ponzi_radar_core::Schema::real("t", &refs), instances).unwrap()
}
