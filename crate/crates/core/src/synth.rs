//! Labeled synthetic transaction logs.
//!
//! Every generated address belongs to exactly one entity, and every entity's
//! addresses are co-spent early on, so multi-input clustering recovers one
//! cluster per entity. Ponzi schemes collect many small deposits from background
//! wallets and repay earlier depositors a multiple of their stake, paying nothing
//! to the last depositors before they stop.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, LogNormal};
use thiserror::Error;

use crate::chain::{OutPoint, Transaction, TxLog, TxOut, Txid, SATOSHI_PER_BTC, SECONDS_PER_DAY};
use crate::dataset::Label;
use crate::seed;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator parameter: {0}")]
    InvalidParams(String),
    #[error("labels: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub n_ponzi: usize,
    pub n_background: usize,
    /// UTC seconds of the first generated block.
    pub start: i64,
    pub horizon_days: u32,
    /// Range of addresses per scheme and per background wallet.
    pub ponzi_addresses: (usize, usize),
    pub background_addresses: (usize, usize),
    /// Scheme active period, in days.
    pub ponzi_lifetime_days: (u32, u32),
    /// Deposits per scheme ~ LogNormal(μ, σ), rounded and clamped to at least 2.
    pub deposits_mu: f64,
    pub deposits_sigma: f64,
    /// Deposit size in BTC ~ LogNormal(μ, σ).
    pub deposit_btc_mu: f64,
    pub deposit_btc_sigma: f64,
    pub payout_multiplier: f64,
    /// Mean of the exponential payout delay.
    pub payout_delay_days: f64,
    /// Share of each scheme's last deposits that are never repaid.
    pub implosion_fraction: f64,
    /// Pay all depositors due on the same day in one transaction.
    pub batch_payouts: bool,
    /// Outgoing payments per background wallet ~ LogNormal(μ, σ), rounded.
    pub pay_count_mu: f64,
    pub pay_count_sigma: f64,
    /// Share of background wallets that receive payments `merchant_weight` times more often.
    pub merchant_fraction: f64,
    pub merchant_weight: f64,
    /// Share of background wallets that send a payer part of the money back a little later.
    pub refund_fraction: f64,
    pub fee: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            seed: 42,
            n_ponzi: 30,
            n_background: 6000,
            start: 1_356_998_400,
            horizon_days: 730,
            ponzi_addresses: (3, 8),
            background_addresses: (1, 3),
            ponzi_lifetime_days: (60, 240),
            deposits_mu: 40f64.ln(),
            deposits_sigma: 0.5,
            deposit_btc_mu: 0.5f64.ln(),
            deposit_btc_sigma: 0.8,
            payout_multiplier: 1.5,
            payout_delay_days: 4.0,
            implosion_fraction: 0.3,
            batch_payouts: true,
            pay_count_mu: 4f64.ln(),
            pay_count_sigma: 0.7,
            merchant_fraction: 0.1,
            merchant_weight: 20.0,
            refund_fraction: 0.0,
            fee: 1_000,
        }
    }
}

impl SynthParams {
    /// Overlapping class distributions: small schemes with slow, modest payouts
    /// among busier background wallets, some of which repay their payers.
    pub fn hard() -> Self {
        SynthParams {
            ponzi_addresses: (1, 3),
            deposits_mu: 12f64.ln(),
            deposits_sigma: 0.6,
            payout_multiplier: 1.1,
            payout_delay_days: 20.0,
            implosion_fraction: 0.5,
            batch_payouts: false,
            pay_count_mu: 8f64.ln(),
            pay_count_sigma: 0.9,
            refund_fraction: 0.15,
            ..SynthParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidParams(m.to_string()));
        let range_ok = |(lo, hi): (usize, usize)| lo >= 1 && lo <= hi;
        if !range_ok(self.ponzi_addresses) || !range_ok(self.background_addresses) {
            return bad("address ranges need 1 <= min <= max");
        }
        let (l0, l1) = self.ponzi_lifetime_days;
        if l0 == 0 || l0 > l1 || l1 >= self.horizon_days {
            return bad("ponzi lifetime must satisfy 0 < min <= max < horizon");
        }
        if !(0.0..=1.0).contains(&self.implosion_fraction) {
            return bad("implosion fraction must lie in [0, 1]");
        }
        for (name, v) in [("merchant fraction", self.merchant_fraction), ("refund fraction", self.refund_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::InvalidParams(format!("{} must lie in [0, 1]", name)));
            }
        }
        for (name, v) in [
            ("deposits sigma", self.deposits_sigma),
            ("deposit size sigma", self.deposit_btc_sigma),
            ("payment count sigma", self.pay_count_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SynthError::InvalidParams(format!("{} must be finite and >= 0", name)));
            }
        }
        if !(self.payout_multiplier > 0.0 && self.payout_multiplier.is_finite()) {
            return bad("payout multiplier must be positive");
        }
        if !(self.payout_delay_days > 0.0 && self.payout_delay_days.is_finite()) {
            return bad("payout delay must be positive");
        }
        if !(self.merchant_weight >= 1.0 && self.merchant_weight.is_finite()) {
            return bad("merchant weight must be >= 1");
        }
        if self.n_background == 0 && self.n_ponzi > 0 {
            return bad("schemes need background wallets as depositors");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub log: TxLog,
    /// Each entity's smallest address (its cluster representative) and class, schemes first.
    pub labels: Vec<(String, Label)>,
}

impl SynthOutput {
    /// Writes `cluster_seed_address,label`.
    pub fn write_labels_csv<W: Write>(&self, writer: W) -> Result<(), SynthError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["cluster_seed_address", "label"])?;
        for (address, label) in &self.labels {
            w.write_record([address.as_str(), &label.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

const DUST: u64 = 546;
const HOUR: i64 = 3_600;

struct Entity {
    addresses: Vec<String>,
    utxos: Vec<(OutPoint, usize, u64)>,
}

impl Entity {
    fn balance(&self) -> u64 {
        self.utxos.iter().map(|u| u.2).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Action {
    Fund { entity: usize, value: u64 },
    Consolidate { entity: usize },
    Pay { from: usize, permille: u32 },
    Refund { from: usize, to: usize, permille: u32 },
    Deposit { scheme: usize, deposit: usize, address: usize, btc_micros: u64 },
    Payout { scheme: usize, deposits: Vec<usize> },
}

struct Sim<'a> {
    params: &'a SynthParams,
    entities: Vec<Entity>,
    transactions: Vec<Transaction>,
    last_time: i64,
    txid_stream: u64,
    rng: ChaCha8Rng,
    recipient: Option<WeightedIndex<f64>>,
    refunders: HashSet<usize>,
    /// Per made deposit: depositor entity, its paying address and the value.
    deposits: BTreeMap<(usize, usize), (usize, usize, u64)>,
    pending: Vec<(i64, u64, Action)>,
}

impl Sim<'_> {
    fn background(&self, i: usize) -> usize {
        self.params.n_ponzi + i
    }

    fn next_txid(&mut self) -> Txid {
        let n = self.transactions.len() as u64;
        let mut bytes = [0u8; 32];
        bytes[..8].copy_from_slice(&seed::derive(self.txid_stream, n).to_be_bytes());
        for (j, chunk) in bytes[8..].chunks_mut(8).enumerate() {
            chunk.copy_from_slice(&seed::derive(self.txid_stream ^ (j as u64 + 1), n).to_be_bytes());
        }
        Txid(bytes)
    }

    fn push(&mut self, time: i64, coinbase: bool, inputs: Vec<OutPoint>, outputs: Vec<(usize, usize, u64)>) -> Txid {
        let timestamp = time.max(self.last_time + 1);
        self.last_time = timestamp;
        let txid = self.next_txid();
        let tx = Transaction {
            txid,
            timestamp,
            coinbase,
            inputs,
            outputs: outputs
                .iter()
                .map(|&(e, a, value)| TxOut {
                    address: self.entities[e].addresses[a].clone(),
                    value,
                })
                .collect(),
        };
        for (i, &(e, a, value)) in outputs.iter().enumerate() {
            self.entities[e].utxos.push((tx.outpoint(i as u32), a, value));
        }
        self.transactions.push(tx);
        txid
    }

    /// Spends oldest coins of `from` to cover `payments` plus the fee; change returns to its first address.
    fn spend(&mut self, time: i64, from: usize, payments: Vec<(usize, usize, u64)>) -> bool {
        let need: u64 = payments.iter().map(|p| p.2).sum::<u64>() + self.params.fee;
        if payments.iter().any(|p| p.2 == 0) || self.entities[from].balance() < need {
            return false;
        }
        let mut gathered = 0;
        let mut take = 0;
        while gathered < need {
            gathered += self.entities[from].utxos[take].2;
            take += 1;
        }
        let inputs: Vec<OutPoint> = self.entities[from].utxos.drain(..take).map(|u| u.0).collect();
        let mut outputs = payments;
        let change = gathered - need;
        if change >= DUST {
            outputs.push((from, 0, change));
        }
        self.push(time, false, inputs, outputs);
        true
    }

    fn schedule(&mut self, time: i64, action: Action) {
        let seq = self.pending.len() as u64;
        self.pending.push((time, seq, action));
    }

    fn run(&mut self, time: i64, action: Action) {
        let p = self.params;
        match action {
            Action::Fund { entity, value } => {
                let n = self.entities[entity].addresses.len() as u64;
                let outs = (0..n as usize)
                    .map(|a| (entity, a, value / n + if a == 0 { value % n } else { 0 }))
                    .collect();
                self.push(time, true, vec![], outs);
            }
            Action::Consolidate { entity } => {
                let e = &mut self.entities[entity];
                let total = e.balance();
                if total > p.fee {
                    let inputs = e.utxos.drain(..).map(|u| u.0).collect();
                    self.push(time, false, inputs, vec![(entity, 0, total - p.fee)]);
                }
            }
            Action::Pay { from, permille } => {
                let Some(weights) = self.recipient.as_ref() else {
                    return;
                };
                let pick = weights.sample(&mut self.rng);
                let mut to = self.background(pick);
                if to == from {
                    to = self.background((to - p.n_ponzi + 1) % p.n_background);
                }
                if to == from {
                    return;
                }
                let value = self.entities[from].balance() / 1000 * permille as u64;
                if self.spend(time, from, vec![(to, 0, value)]) && self.refunders.contains(&to) {
                    let delay = self.rng.random_range(HOUR..3 * SECONDS_PER_DAY);
                    let permille = self.rng.random_range(100..600);
                    self.schedule(time + delay, Action::Refund { from: to, to: from, permille });
                }
            }
            Action::Refund { from, to, permille } => {
                let value = self.entities[from].balance() / 1000 * permille as u64;
                self.spend(time, from, vec![(to, 0, value)]);
            }
            Action::Deposit { scheme, deposit, address, btc_micros } => {
                let wanted = btc_micros * (SATOSHI_PER_BTC / 1_000_000);
                for _ in 0..20 {
                    let pick = self.rng.random_range(0..p.n_background);
                    let investor = self.background(pick);
                    let available = self.entities[investor].balance().saturating_sub(p.fee) / 10 * 8;
                    let value = wanted.min(available);
                    if value < 10 * DUST {
                        continue;
                    }
                    let first_input = self.entities[investor].utxos[0].1;
                    if self.spend(time, investor, vec![(scheme, address, value)]) {
                        self.deposits.insert((scheme, deposit), (investor, first_input, value));
                    }
                    return;
                }
            }
            Action::Payout { scheme, deposits } => {
                let mut payments = Vec::new();
                let mut total = p.fee;
                let balance = self.entities[scheme].balance();
                for d in deposits {
                    let Some(&(investor, address, value)) = self.deposits.get(&(scheme, d)) else {
                        continue;
                    };
                    let owed = (value as f64 * p.payout_multiplier).round() as u64;
                    if total + owed > balance {
                        break;
                    }
                    total += owed;
                    payments.push((investor, address, owed));
                }
                if !payments.is_empty() {
                    self.spend(time, scheme, payments);
                }
            }
        }
    }
}

fn address(rng: &mut ChaCha8Rng, taken: &mut HashSet<String>) -> String {
    const ALPHABET: &[u8] = b"123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";
    loop {
        let body: String = (0..33).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char).collect();
        let a = format!("1{}", body);
        if taken.insert(a.clone()) {
            return a;
        }
    }
}

fn lognormal(mu: f64, sigma: f64) -> LogNormal<f64> {
    LogNormal::new(mu, sigma).expect("validated parameters")
}

/// Generates a valid log and its labels; identical parameters give identical output.
pub fn generate(params: &SynthParams) -> Result<SynthOutput, SynthError> {
    params.validate()?;
    let p = params;
    let mut rng = seed::rng(seed::derive(p.seed, 0));
    let day = SECONDS_PER_DAY;
    let horizon = p.horizon_days as i64 * day;

    let mut taken = HashSet::new();
    let n_entities = p.n_ponzi + p.n_background;
    let entities: Vec<Entity> = (0..n_entities)
        .map(|e| {
            let (lo, hi) = if e < p.n_ponzi { p.ponzi_addresses } else { p.background_addresses };
            let n = rng.random_range(lo..=hi);
            Entity {
                addresses: (0..n).map(|_| address(&mut rng, &mut taken)).collect(),
                utxos: Vec::new(),
            }
        })
        .collect();

    let merchants: Vec<f64> = (0..p.n_background)
        .map(|_| if rng.random_bool(p.merchant_fraction) { p.merchant_weight } else { 1.0 })
        .collect();
    let refunders: HashSet<usize> = (0..p.n_background)
        .filter(|_| rng.random_bool(p.refund_fraction))
        .map(|i| p.n_ponzi + i)
        .collect();
    let mut sim = Sim {
        params: p,
        entities,
        transactions: Vec::new(),
        last_time: p.start - 1,
        txid_stream: seed::derive(p.seed, 1),
        rng: seed::rng(seed::derive(p.seed, 2)),
        recipient: WeightedIndex::new(&merchants).ok(),
        refunders,
        deposits: BTreeMap::new(),
        pending: Vec::new(),
    };

    let funding = lognormal(2f64.ln(), 1.0);
    let pay_count = lognormal(p.pay_count_mu, p.pay_count_sigma);
    for i in 0..p.n_background {
        let e = p.n_ponzi + i;
        let t = p.start + rng.random_range(0..horizon / 2);
        let value = ((funding.sample(&mut rng) * SATOSHI_PER_BTC as f64) as u64).max(100 * DUST);
        sim.schedule(t, Action::Fund { entity: e, value });
        if sim.entities[e].addresses.len() > 1 {
            sim.schedule(t + HOUR, Action::Consolidate { entity: e });
        }
        let payments = pay_count.sample(&mut rng).round() as usize;
        for _ in 0..payments {
            let at = rng.random_range(t + 2 * HOUR..p.start + horizon);
            let permille = rng.random_range(50..500);
            sim.schedule(at, Action::Pay { from: e, permille });
        }
    }

    let deposit_count = lognormal(p.deposits_mu, p.deposits_sigma);
    let deposit_size = lognormal(p.deposit_btc_mu, p.deposit_btc_sigma);
    let delay = Exp::new(1.0 / (p.payout_delay_days * day as f64)).expect("validated delay");
    for s in 0..p.n_ponzi {
        let lifetime = rng.random_range(p.ponzi_lifetime_days.0..=p.ponzi_lifetime_days.1) as i64 * day;
        let t0 = p.start + rng.random_range(30 * day..(horizon - lifetime).max(30 * day + 1));
        let capital = ((funding.sample(&mut rng) * SATOSHI_PER_BTC as f64) as u64).max(100 * DUST);
        sim.schedule(t0, Action::Fund { entity: s, value: capital });
        if sim.entities[s].addresses.len() > 1 {
            sim.schedule(t0 + HOUR, Action::Consolidate { entity: s });
        }
        let n = (deposit_count.sample(&mut rng).round() as usize).max(2);
        let mut times: Vec<i64> = (0..n).map(|_| rng.random_range(t0 + 2 * HOUR..t0 + lifetime)).collect();
        times.sort_unstable();
        let repaid = ((1.0 - p.implosion_fraction) * n as f64).round() as usize;
        let payout_hour = rng.random_range(0..24) * HOUR;
        let mut batches: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (d, &t) in times.iter().enumerate() {
            let n_addr = sim.entities[s].addresses.len();
            let btc_micros = (deposit_size.sample(&mut rng) * 1e6).round().max(1.0) as u64;
            sim.schedule(
                t,
                Action::Deposit { scheme: s, deposit: d, address: rng.random_range(0..n_addr), btc_micros },
            );
            if d < repaid {
                let due = t + (delay.sample(&mut rng) as i64).max(HOUR);
                if p.batch_payouts {
                    let slot = (due - p.start + day - 1).div_euclid(day) * day + p.start + payout_hour;
                    batches.entry(slot.max(due)).or_default().push(d);
                } else {
                    batches.entry(due).or_default().push(d);
                }
            }
        }
        for (t, deposits) in batches {
            sim.schedule(t, Action::Payout { scheme: s, deposits });
        }
    }

    // Actions scheduled while running (refunds) always lie in the future, so a
    // priority queue keyed on (time, seq) keeps global time order.
    let mut queue: std::collections::BinaryHeap<std::cmp::Reverse<(i64, u64, Action)>> =
        sim.pending.drain(..).map(std::cmp::Reverse).collect();
    let mut seq = queue.len() as u64;
    while let Some(std::cmp::Reverse((t, _, action))) = queue.pop() {
        sim.run(t, action);
        for (t, _, a) in sim.pending.drain(..) {
            queue.push(std::cmp::Reverse((t, seq, a)));
            seq += 1;
        }
    }

    let labels = sim
        .entities
        .iter()
        .enumerate()
        .map(|(e, ent)| {
            let smallest = ent.addresses.iter().min().expect("entities have addresses").clone();
            (smallest, if e < p.n_ponzi { Label::P } else { Label::NP })
        })
        .collect();
    let log = TxLog::from_transactions(sim.transactions).expect("generated txids are unique");
    Ok(SynthOutput { log, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::write_tx_log;
    use crate::cluster::build_clusters;

    fn small(seed: u64) -> SynthParams {
        SynthParams {
            seed,
            n_ponzi: 3,
            n_background: 150,
            ..SynthParams::default()
        }
    }

    #[test]
    fn valid_and_one_cluster_per_entity() {
        let out = generate(&small(7)).unwrap();
        let report = out.log.validate();
        assert!(report.ok(), "{}", report);
        let clusters = build_clusters(&out.log);
        assert_eq!(clusters.len(), 153);
        let seeded: HashSet<usize> = out.labels.iter().map(|(a, _)| clusters.cluster_of(a).unwrap()).collect();
        assert_eq!(seeded.len(), 153);
        for (a, _) in &out.labels {
            assert_eq!(clusters.representative(clusters.cluster_of(a).unwrap()), a);
        }
        assert_eq!(out.labels.iter().filter(|l| l.1 == Label::P).count(), 3);
    }

    #[test]
    fn deterministic() {
        let bytes = |s| {
            let mut buf = Vec::new();
            write_tx_log(&generate(&small(s)).unwrap().log, &mut buf).unwrap();
            buf
        };
        assert_eq!(bytes(5), bytes(5));
        assert_ne!(bytes(5), bytes(6));
    }

    #[test]
    fn no_schemes_means_no_positives() {
        let out = generate(&SynthParams { n_ponzi: 0, n_background: 40, ..SynthParams::default() }).unwrap();
        assert!(out.labels.iter().all(|l| l.1 == Label::NP));
        assert!(out.log.validate().ok());
    }

    #[test]
    fn hard_mode_is_valid() {
        let out = generate(&SynthParams { n_ponzi: 3, n_background: 150, ..SynthParams::hard() }).unwrap();
        assert!(out.log.validate().ok());
        assert_eq!(build_clusters(&out.log).len(), 153);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(generate(&SynthParams { implosion_fraction: 1.5, ..SynthParams::default() }).is_err());
        assert!(generate(&SynthParams { ponzi_addresses: (0, 2), ..SynthParams::default() }).is_err());
        assert!(generate(&SynthParams { n_background: 0, ..SynthParams::default() }).is_err());
    }

    #[test]
    fn labels_csv() {
        let out = generate(&SynthParams { n_ponzi: 1, n_background: 2, ..SynthParams::default() }).unwrap();
        let mut buf = Vec::new();
        out.write_labels_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "cluster_seed_address,label");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(",P"));
        assert!(lines[3].ends_with(",nP"));
    }
}
