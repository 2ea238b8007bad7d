//! Behavioral features of an address cluster.
//!
//! A cluster is treated as one super-address: transactions touching it are
//! collapsed into per-transaction incoming and outgoing events, and every
//! feature is computed over those events. Transactions whose inputs and
//! outputs all belong to the cluster are internal and produce no events.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rayon::prelude::*;

use crate::chain::{utc_day, TxLog, Txid};
use crate::cluster::ClusterSet;
use crate::dataset::{FeatureTable, Schema};

/// Version tag of the feature column layout below.
pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Integer,
    Real,
}

/// Feature columns in schema order.
pub const FEATURE_COLUMNS: [(&str, ColumnKind); 20] = [
    ("n_addr", ColumnKind::Integer),
    ("lifetime_days", ColumnKind::Integer),
    ("activity_days", ColumnKind::Integer),
    ("max_daily_tx", ColumnKind::Integer),
    ("gini_in", ColumnKind::Real),
    ("gini_out", ColumnKind::Real),
    ("sum_in", ColumnKind::Integer),
    ("sum_out", ColumnKind::Integer),
    ("count_in", ColumnKind::Integer),
    ("count_out", ColumnKind::Integer),
    ("in_share", ColumnKind::Real),
    ("avg_in", ColumnKind::Real),
    ("std_in", ColumnKind::Real),
    ("avg_out", ColumnKind::Real),
    ("std_out", ColumnKind::Real),
    ("paid_back_addrs", ColumnKind::Integer),
    ("delay_min", ColumnKind::Integer),
    ("delay_max", ColumnKind::Integer),
    ("delay_avg", ColumnKind::Real),
    ("max_daily_balance_delta", ColumnKind::Integer),
];

/// One transaction's effect on the cluster in one direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEvent {
    pub txid: Txid,
    pub timestamp: i64,
    /// Satoshi received (incoming) or spent (outgoing) by the cluster in this transaction.
    pub amount: u64,
    /// Addresses outside the cluster on the other side: payers for incoming
    /// events, recipients for outgoing ones. Sorted, without duplicates.
    pub counterparts: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DayActivity {
    /// Distinct non-internal transactions touching the cluster that day.
    pub transactions: u64,
    /// Incoming minus outgoing satoshi over the day.
    pub net: i128,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterLedger {
    pub incoming: Vec<LedgerEvent>,
    pub outgoing: Vec<LedgerEvent>,
    /// Keyed by UTC day number.
    pub days: BTreeMap<i64, DayActivity>,
}

impl ClusterLedger {
    pub fn is_empty(&self) -> bool {
        self.incoming.is_empty() && self.outgoing.is_empty()
    }

    /// End-of-day balances (cumulative in − out) for every calendar day from
    /// the first active day to the last, inclusive.
    pub fn daily_balances(&self) -> Vec<(i64, i128)> {
        let (Some((&first, _)), Some((&last, _))) = (self.days.first_key_value(), self.days.last_key_value()) else {
            return Vec::new();
        };
        let mut balance = 0i128;
        (first..=last)
            .map(|day| {
                balance += self.days.get(&day).map_or(0, |a| a.net);
                (day, balance)
            })
            .collect()
    }
}

/// Builds the ledger of the address set `members`.
pub fn build_ledger<'a, I>(log: &TxLog, members: I) -> ClusterLedger
where
    I: IntoIterator<Item = &'a str>,
{
    let members: HashSet<&str> = members.into_iter().collect();
    let mut positions: BTreeSet<usize> = BTreeSet::new();
    for address in &members {
        for entry in log.address_history(address) {
            positions.insert(log.position(&entry.txid).expect("indexed txid"));
        }
    }

    let mut ledger = ClusterLedger::default();
    for pos in positions {
        let tx = &log.transactions()[pos];
        let inputs: Vec<(&str, u64)> = log.resolved_inputs(tx).collect();

        let spent: u64 = inputs
            .iter()
            .filter(|(a, _)| members.contains(a))
            .map(|(_, v)| v)
            .sum();
        let spends = inputs.iter().any(|(a, _)| members.contains(a));
        let received: u64 = tx
            .outputs
            .iter()
            .filter(|o| members.contains(o.address.as_str()))
            .map(|o| o.value)
            .sum();
        let receives = tx.outputs.iter().any(|o| members.contains(o.address.as_str()));

        let internal = !tx.coinbase
            && inputs.len() == tx.inputs.len()
            && inputs.iter().all(|(a, _)| members.contains(a))
            && tx.outputs.iter().all(|o| members.contains(o.address.as_str()));
        if internal || !(spends || receives) {
            continue;
        }

        if receives {
            let payers: BTreeSet<&str> = inputs
                .iter()
                .map(|(a, _)| *a)
                .filter(|a| !members.contains(a))
                .collect();
            ledger.incoming.push(LedgerEvent {
                txid: tx.txid,
                timestamp: tx.timestamp,
                amount: received,
                counterparts: payers.into_iter().map(str::to_string).collect(),
            });
        }
        if spends {
            let payees: BTreeSet<&str> = tx
                .outputs
                .iter()
                .map(|o| o.address.as_str())
                .filter(|a| !members.contains(a))
                .collect();
            ledger.outgoing.push(LedgerEvent {
                txid: tx.txid,
                timestamp: tx.timestamp,
                amount: spent,
                counterparts: payees.into_iter().map(str::to_string).collect(),
            });
        }
        let day = ledger.days.entry(utc_day(tx.timestamp)).or_default();
        day.transactions += 1;
        day.net += received as i128 - spent as i128;
    }
    ledger
}

pub fn build_cluster_ledger(log: &TxLog, clusters: &ClusterSet, cluster: usize) -> ClusterLedger {
    build_ledger(log, clusters.members(cluster))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVector {
    pub n_addr: u64,
    pub lifetime_days: u64,
    pub activity_days: u64,
    pub max_daily_tx: u64,
    pub gini_in: f64,
    pub gini_out: f64,
    pub sum_in: u64,
    pub sum_out: u64,
    pub count_in: u64,
    pub count_out: u64,
    /// count_in / (count_in + count_out).
    pub in_share: f64,
    pub avg_in: f64,
    pub std_in: f64,
    pub avg_out: f64,
    pub std_out: f64,
    pub paid_back_addrs: u64,
    /// Seconds.
    pub delay_min: u64,
    pub delay_max: u64,
    pub delay_avg: f64,
    pub max_daily_balance_delta: u64,
}

impl FeatureVector {
    /// Values in [`FEATURE_COLUMNS`] order.
    pub fn values(&self) -> Vec<f64> {
        vec![
            self.n_addr as f64,
            self.lifetime_days as f64,
            self.activity_days as f64,
            self.max_daily_tx as f64,
            self.gini_in,
            self.gini_out,
            self.sum_in as f64,
            self.sum_out as f64,
            self.count_in as f64,
            self.count_out as f64,
            self.in_share,
            self.avg_in,
            self.std_in,
            self.avg_out,
            self.std_out,
            self.paid_back_addrs as f64,
            self.delay_min as f64,
            self.delay_max as f64,
            self.delay_avg,
            self.max_daily_balance_delta as f64,
        ]
    }
}

/// Gini coefficient on `[0, 1]`: `Σ_i Σ_j |x_i − x_j| / (2 n Σ x)`.
///
/// Returns `None` for an empty slice and `0` when the total is zero.
pub fn gini(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Some(0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    // Σ_i Σ_j |x_i − x_j| = 2 Σ_i (2i − n − 1) x_(i) over the ascending order, i from 1
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Some((weighted / (n * total)).clamp(0.0, 1.0))
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Counterparts that paid the cluster and were later paid by it (strictly later).
pub fn paid_back_count(ledger: &ClusterLedger) -> u64 {
    let mut first_paid_in: HashMap<&str, i64> = HashMap::new();
    for ev in &ledger.incoming {
        for a in &ev.counterparts {
            first_paid_in
                .entry(a.as_str())
                .and_modify(|t| *t = (*t).min(ev.timestamp))
                .or_insert(ev.timestamp);
        }
    }
    let mut last_paid_out: HashMap<&str, i64> = HashMap::new();
    for ev in &ledger.outgoing {
        for a in &ev.counterparts {
            last_paid_out
                .entry(a.as_str())
                .and_modify(|t| *t = (*t).max(ev.timestamp))
                .or_insert(ev.timestamp);
        }
    }
    last_paid_out
        .iter()
        .filter(|(a, &t_out)| first_paid_in.get(*a).is_some_and(|&t_in| t_in < t_out))
        .count() as u64
}

/// Delay of each outgoing event from the latest incoming event of another
/// transaction at or before it. Outgoing events with no such incoming event are skipped.
pub fn payout_delays(ledger: &ClusterLedger) -> Vec<u64> {
    let mut delays = Vec::new();
    let mut next = 0;
    for out in &ledger.outgoing {
        while next < ledger.incoming.len() && ledger.incoming[next].timestamp <= out.timestamp {
            next += 1;
        }
        let paired = ledger.incoming[..next]
            .iter()
            .rev()
            .find(|ev| ev.txid != out.txid);
        if let Some(ev) = paired {
            delays.push((out.timestamp - ev.timestamp) as u64);
        }
    }
    delays
}

pub fn extract_features(ledger: &ClusterLedger, n_addr: usize) -> FeatureVector {
    let mut f = FeatureVector {
        n_addr: n_addr as u64,
        ..FeatureVector::default()
    };
    if ledger.is_empty() {
        return f;
    }

    let first_day = *ledger.days.keys().next().expect("non-empty ledger has days");
    let last_day = *ledger.days.keys().next_back().expect("non-empty ledger has days");
    if !ledger.incoming.is_empty() {
        // in a validated log the first event is always incoming
        f.lifetime_days = (last_day - first_day) as u64;
    }
    f.activity_days = ledger.days.len() as u64;
    f.max_daily_tx = ledger.days.values().map(|d| d.transactions).max().unwrap_or(0);

    let ins: Vec<f64> = ledger.incoming.iter().map(|e| e.amount as f64).collect();
    let outs: Vec<f64> = ledger.outgoing.iter().map(|e| e.amount as f64).collect();
    f.gini_in = gini(&ins).unwrap_or(0.0);
    f.gini_out = gini(&outs).unwrap_or(0.0);
    f.sum_in = ledger.incoming.iter().map(|e| e.amount).sum();
    f.sum_out = ledger.outgoing.iter().map(|e| e.amount).sum();
    f.count_in = ledger.incoming.len() as u64;
    f.count_out = ledger.outgoing.len() as u64;
    f.in_share = f.count_in as f64 / (f.count_in + f.count_out) as f64;
    (f.avg_in, f.std_in) = mean_std(&ins);
    (f.avg_out, f.std_out) = mean_std(&outs);
    f.paid_back_addrs = paid_back_count(ledger);

    let delays = payout_delays(ledger);
    if !delays.is_empty() {
        f.delay_min = *delays.iter().min().unwrap();
        f.delay_max = *delays.iter().max().unwrap();
        f.delay_avg = delays.iter().map(|&d| d as f64).sum::<f64>() / delays.len() as f64;
    }

    // balance(d) − balance(d − 1) is the day's net flow; the first day has no predecessor
    f.max_daily_balance_delta = ledger
        .days
        .iter()
        .skip(1)
        .map(|(_, a)| a.net.unsigned_abs())
        .max()
        .unwrap_or(0) as u64;
    f
}

/// Features of every cluster, indexed by cluster.
pub fn cluster_features(log: &TxLog, clusters: &ClusterSet) -> Vec<FeatureVector> {
    (0..clusters.len())
        .into_par_iter()
        .map(|c| extract_features(&build_cluster_ledger(log, clusters, c), clusters.size(c)))
        .collect()
}

/// One row per cluster keyed by its representative address, in cluster order.
pub fn feature_table(log: &TxLog, clusters: &ClusterSet) -> FeatureTable {
    let rows = cluster_features(log, clusters)
        .into_iter()
        .enumerate()
        .map(|(c, f)| (clusters.representative(c).to_string(), f.values()))
        .collect();
    FeatureTable {
        schema: Schema::v1(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{OutPoint, Transaction, TxOut};
    use crate::cluster::build_clusters;

    const BTC: u64 = 100_000_000;

    fn txid(n: u8) -> Txid {
        Txid([n; 32])
    }

    fn tx(n: u8, t: i64, ins: &[(u8, u32)], outs: &[(&str, u64)]) -> Transaction {
        Transaction {
            txid: txid(n),
            timestamp: t,
            coinbase: ins.is_empty(),
            inputs: ins
                .iter()
                .map(|&(p, index)| OutPoint { txid: txid(p), index })
                .collect(),
            outputs: outs
                .iter()
                .map(|&(a, value)| TxOut { address: a.to_string(), value })
                .collect(),
        }
    }

    fn event(n: u8, t: i64, amount: u64, counterparts: &[&str]) -> LedgerEvent {
        LedgerEvent {
            txid: txid(n),
            timestamp: t,
            amount,
            counterparts: counterparts.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn pairwise_gini(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let total: f64 = x.iter().sum();
        let mut acc = 0.0;
        for a in x {
            for b in x {
                acc += (a - b).abs();
            }
        }
        acc / (2.0 * n * total)
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[5.0, 5.0, 5.0, 5.0]), Some(0.0));
        // ordered-pair sum of |Δ| is 20, so 20 / (2 · 4 · 10)
        assert!((gini(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!((gini(&[0.0, 0.0, 0.0, 1.0]).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(gini(&[0.0, 0.0]), Some(0.0));
        assert_eq!(gini(&[]), None);
        assert!((pairwise_gini(&[1.0, 2.0, 3.0, 4.0]) - 0.25).abs() < 1e-15);
    }

    /// B1 and B2 receive in T and T_A and are co-spent by T_B.
    fn split_trio() -> TxLog {
        TxLog::from_transactions(vec![
            tx(1, 0, &[], &[("A", BTC), ("B1", 2 * BTC)]),
            tx(2, 3_600, &[(1, 0)], &[("B2", 90_000_000), ("A", 10_000_000)]),
            tx(3, 7_200, &[(1, 1), (2, 0)], &[("C", 250_000_000)]),
        ])
        .unwrap()
    }

    #[test]
    fn trio_cluster_ledger() {
        let log = split_trio();
        let clusters = build_clusters(&log);
        let b = clusters.cluster_of("B1").unwrap();
        assert_eq!(b, clusters.cluster_of("B2").unwrap());
        let ledger = build_cluster_ledger(&log, &clusters, b);
        let incoming: Vec<(Txid, u64)> = ledger.incoming.iter().map(|e| (e.txid, e.amount)).collect();
        assert_eq!(incoming, vec![(txid(1), 2 * BTC), (txid(2), 90_000_000)]);
        assert_eq!(ledger.outgoing.len(), 1);
        assert_eq!(ledger.outgoing[0].amount, 290_000_000);
        assert_eq!(ledger.outgoing[0].counterparts, vec!["C"]);
        assert_eq!(ledger.incoming[1].counterparts, vec!["A"]);
    }

    #[test]
    fn internal_shuffle_has_no_events() {
        let log = TxLog::from_transactions(vec![
            tx(1, 0, &[], &[("X", 10), ("Y", 10)]),
            tx(2, 10, &[(1, 0), (1, 1)], &[("X", 15), ("Y", 5)]),
        ])
        .unwrap();
        let ledger = build_ledger(&log, ["X", "Y"]);
        assert_eq!(ledger.incoming.len(), 1);
        assert!(ledger.outgoing.is_empty());
        assert_eq!(ledger.days.len(), 1);
        assert_eq!(ledger.days[&0].transactions, 1);
    }

    #[test]
    fn change_output_makes_both_events() {
        let log = TxLog::from_transactions(vec![
            tx(1, 0, &[], &[("W", 100)]),
            tx(2, 10, &[(1, 0)], &[("Z", 60), ("W", 39)]),
        ])
        .unwrap();
        let ledger = build_ledger(&log, ["W"]);
        assert_eq!(ledger.incoming.len(), 2);
        assert_eq!(ledger.outgoing.len(), 1);
        assert_eq!(ledger.days[&0].transactions, 2);
        // the outgoing change transaction pairs with the earlier deposit, not itself
        assert_eq!(payout_delays(&ledger), vec![10]);
    }

    #[test]
    fn empty_ledger_gives_zero_vector() {
        let f = extract_features(&ClusterLedger::default(), 3);
        assert_eq!(f, FeatureVector { n_addr: 3, ..Default::default() });
    }

    #[test]
    fn single_incoming_event() {
        let mut ledger = ClusterLedger::default();
        ledger.incoming.push(event(1, 500, 42, &["p"]));
        ledger.days.insert(0, DayActivity { transactions: 1, net: 42 });
        let f = extract_features(&ledger, 1);
        assert_eq!(f.lifetime_days, 0);
        assert_eq!(f.activity_days, 1);
        assert_eq!(f.count_out, 0);
        assert_eq!(f.in_share, 1.0);
        assert_eq!((f.delay_min, f.delay_max, f.delay_avg), (0, 0, 0.0));
        assert_eq!(f.gini_in, 0.0);
        assert_eq!(f.max_daily_tx, 1);
    }

    #[test]
    fn one_hour_delay() {
        let log = TxLog::from_transactions(vec![
            tx(1, 0, &[], &[("K", 10)]),
            tx(2, 3_600, &[(1, 0)], &[("Q", 4)]),
        ])
        .unwrap();
        let f = extract_features(&build_ledger(&log, ["K"]), 1);
        assert_eq!((f.delay_min, f.delay_max, f.delay_avg), (3_600, 3_600, 3_600.0));
        assert_eq!((f.sum_in, f.sum_out), (10, 10));
        assert_eq!(f.in_share, 0.5);

        let mut ledger = ClusterLedger::default();
        ledger.incoming.push(event(1, 0, 10, &[]));
        ledger.outgoing.push(event(2, 3_600, 4, &[]));
        ledger.days.insert(0, DayActivity { transactions: 2, net: 6 });
        let f = extract_features(&ledger, 1);
        assert_eq!((f.delay_min, f.delay_max, f.delay_avg), (3_600, 3_600, 3_600.0));
        assert_eq!((f.sum_in, f.sum_out), (10, 4));
    }

    #[test]
    fn two_day_balance_delta() {
        let mut ledger = ClusterLedger::default();
        ledger.incoming.push(event(1, 0, 100, &[]));
        ledger.outgoing.push(event(2, 86_400, 70, &[]));
        ledger.days.insert(0, DayActivity { transactions: 1, net: 100 });
        ledger.days.insert(1, DayActivity { transactions: 1, net: -70 });
        assert_eq!(ledger.daily_balances(), vec![(0, 100), (1, 30)]);
        let f = extract_features(&ledger, 1);
        assert_eq!(f.max_daily_balance_delta, 70);
        assert_eq!(f.lifetime_days, 1);
        assert_eq!(f.activity_days, 2);
    }

    #[test]
    fn gap_days_count_in_lifetime_but_not_activity() {
        let mut ledger = ClusterLedger::default();
        ledger.incoming.push(event(1, 0, 100, &[]));
        ledger.incoming.push(event(2, 10 * 86_400, 50, &[]));
        ledger.days.insert(0, DayActivity { transactions: 1, net: 100 });
        ledger.days.insert(10, DayActivity { transactions: 1, net: 50 });
        let f = extract_features(&ledger, 1);
        assert_eq!(f.lifetime_days, 10);
        assert_eq!(f.activity_days, 2);
        assert_eq!(ledger.daily_balances().len(), 11);
        assert_eq!(f.max_daily_balance_delta, 50);
    }

    #[test]
    fn paid_back_examples() {
        let mut ledger = ClusterLedger::default();
        assert_eq!(paid_back_count(&ledger), 0);
        ledger.incoming.push(event(1, 1, 5, &["a"]));
        ledger.outgoing.push(event(2, 2, 5, &["a"]));
        ledger.outgoing.push(event(3, 3, 5, &["b"]));
        assert_eq!(paid_back_count(&ledger), 1);

        let mut wrong_order = ClusterLedger::default();
        wrong_order.outgoing.push(event(1, 1, 5, &["a"]));
        wrong_order.incoming.push(event(2, 2, 5, &["a"]));
        assert_eq!(paid_back_count(&wrong_order), 0);

        let mut same_time = ClusterLedger::default();
        same_time.incoming.push(event(1, 5, 5, &["a"]));
        same_time.outgoing.push(event(2, 5, 5, &["a"]));
        assert_eq!(paid_back_count(&same_time), 0);
    }

    #[test]
    fn singleton_cluster_matches_pointwise_address() {
        let log = split_trio();
        let clusters = build_clusters(&log);
        let a = clusters.cluster_of("A").unwrap();
        assert_eq!(clusters.size(a), 1);
        assert_eq!(
            build_cluster_ledger(&log, &clusters, a),
            build_ledger(&log, ["A"])
        );
        let all = cluster_features(&log, &clusters);
        assert_eq!(all.len(), clusters.len());
        assert_eq!(all[a], extract_features(&build_ledger(&log, ["A"]), 1));
    }

    #[test]
    fn column_layout_matches_values() {
        assert_eq!(FeatureVector::default().values().len(), FEATURE_COLUMNS.len());
    }
}
