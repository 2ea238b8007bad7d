//! Transaction log ingestion.
//!
//! The log is a line-delimited JSON rendering of UTXO transactions reduced to
//! what address-level analysis needs: who paid whom, how much, and when.
//! Scripts and witnesses are not represented; an output is an address and a
//! value in satoshi.

mod rates;

pub use rates::{to_usd, utc_date, RateError, RateTable};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub const SATOSHI_PER_BTC: u64 = 100_000_000;
pub const SECONDS_PER_DAY: i64 = 86_400;

/// 32-byte transaction identifier, rendered as 64 lowercase hex digits.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Txid(pub [u8; 32]);

impl FromStr for Txid {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bytes = [0u8; 32];
        hex::decode_to_slice(s, &mut bytes)?;
        Ok(Txid(bytes))
    }
}

impl fmt::Display for Txid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Txid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Txid({})", self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutPoint {
    pub txid: Txid,
    pub index: u32,
}

impl fmt::Display for OutPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.txid, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TxOut {
    pub address: String,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub txid: Txid,
    /// UTC seconds since the Unix epoch.
    pub timestamp: i64,
    pub coinbase: bool,
    pub inputs: Vec<OutPoint>,
    pub outputs: Vec<TxOut>,
}

impl Transaction {
    pub fn output_total(&self) -> u64 {
        self.outputs.iter().map(|o| o.value).sum()
    }

    pub fn outpoint(&self, index: u32) -> OutPoint {
        OutPoint { txid: self.txid, index }
    }

    fn order_key(&self) -> (i64, Txid) {
        (self.timestamp, self.txid)
    }
}

/// An indexed output together with the first transaction (in log order) that spends it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputEntry {
    pub address: String,
    pub value: u64,
    pub spent_by: Option<Txid>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// The address received value (it appears in an output).
    In,
    /// The address spent value (one of its outputs is consumed by an input).
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddrEntry {
    pub txid: Txid,
    pub direction: Direction,
    pub value: u64,
    pub timestamp: i64,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: duplicate txid {txid} (first seen on line {first_line})")]
    DuplicateTxid {
        line: usize,
        first_line: usize,
        txid: Txid,
    },
    #[error("line {line}: output {output} has negative value {value}")]
    NegativeValue {
        line: usize,
        output: usize,
        value: String,
    },
    #[error("line {line}: timestamp {raw} is not an integer number of seconds")]
    BadTimestamp { line: usize, raw: String },
    #[error("line {line}: sum of output values exceeds the 64-bit signed satoshi range")]
    ValueOverflow { line: usize },
    #[error("line {line}: {message}")]
    Shape { line: usize, message: String },
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
#[error("duplicate txid {0}")]
pub struct DuplicateTxid(pub Txid);

/// Immutable, fully indexed transaction log.
#[derive(Debug, Clone, Default)]
pub struct TxLog {
    transactions: Vec<Transaction>,
    position: HashMap<Txid, usize>,
    out_index: HashMap<OutPoint, OutputEntry>,
    addr_index: BTreeMap<String, Vec<AddrEntry>>,
}

impl TxLog {
    /// Sorts the transactions by `(timestamp, txid)` and builds the output and address indexes.
    pub fn from_transactions(mut transactions: Vec<Transaction>) -> Result<TxLog, DuplicateTxid> {
        transactions.sort_by_key(Transaction::order_key);

        let mut position = HashMap::with_capacity(transactions.len());
        for (i, tx) in transactions.iter().enumerate() {
            if position.insert(tx.txid, i).is_some() {
                return Err(DuplicateTxid(tx.txid));
            }
        }

        let mut out_index = HashMap::new();
        for tx in &transactions {
            for (i, out) in tx.outputs.iter().enumerate() {
                out_index.insert(
                    tx.outpoint(i as u32),
                    OutputEntry {
                        address: out.address.clone(),
                        value: out.value,
                        spent_by: None,
                    },
                );
            }
        }

        let mut addr_index: BTreeMap<String, Vec<AddrEntry>> = BTreeMap::new();
        for tx in &transactions {
            for input in &tx.inputs {
                if let Some(entry) = out_index.get_mut(input) {
                    if entry.spent_by.is_none() {
                        entry.spent_by = Some(tx.txid);
                    }
                    addr_index
                        .entry(entry.address.clone())
                        .or_default()
                        .push(AddrEntry {
                            txid: tx.txid,
                            direction: Direction::Out,
                            value: entry.value,
                            timestamp: tx.timestamp,
                        });
                }
            }
            for out in &tx.outputs {
                addr_index
                    .entry(out.address.clone())
                    .or_default()
                    .push(AddrEntry {
                        txid: tx.txid,
                        direction: Direction::In,
                        value: out.value,
                        timestamp: tx.timestamp,
                    });
            }
        }

        Ok(TxLog {
            transactions,
            position,
            out_index,
            addr_index,
        })
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn get(&self, txid: &Txid) -> Option<&Transaction> {
        self.position.get(txid).map(|&i| &self.transactions[i])
    }

    /// Position of a transaction in the sorted log.
    pub fn position(&self, txid: &Txid) -> Option<usize> {
        self.position.get(txid).copied()
    }

    pub fn output(&self, outpoint: &OutPoint) -> Option<&OutputEntry> {
        self.out_index.get(outpoint)
    }

    pub fn address_history(&self, address: &str) -> &[AddrEntry] {
        self.addr_index
            .get(address)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// All addresses occurring in the log, in lexicographic order.
    pub fn addresses(&self) -> impl Iterator<Item = &str> {
        self.addr_index.keys().map(String::as_str)
    }

    pub fn address_count(&self) -> usize {
        self.addr_index.len()
    }

    /// Resolved inputs of `tx` as `(address, value)`; unresolvable inputs are skipped.
    pub fn resolved_inputs<'a>(
        &'a self,
        tx: &'a Transaction,
    ) -> impl Iterator<Item = (&'a str, u64)> + 'a {
        tx.inputs
            .iter()
            .filter_map(|op| self.out_index.get(op))
            .map(|e| (e.address.as_str(), e.value))
    }

    /// `Σ inputs − Σ outputs`, or `None` for coinbase transactions and transactions with
    /// unresolvable inputs.
    pub fn fee(&self, tx: &Transaction) -> Option<i128> {
        if tx.coinbase {
            return None;
        }
        let mut total: i128 = 0;
        for op in &tx.inputs {
            total += self.out_index.get(op)?.value as i128;
        }
        Some(total - tx.output_total() as i128)
    }

    /// Checks spend-once semantics and fee non-negativity.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut spenders: HashMap<OutPoint, Vec<Txid>> = HashMap::new();

        for (pos, tx) in self.transactions.iter().enumerate() {
            let mut all_resolved = true;
            for (i, op) in tx.inputs.iter().enumerate() {
                let reason = match self.position.get(&op.txid) {
                    None => Some(DanglingReason::UnknownTransaction),
                    Some(&p) if p >= pos => Some(DanglingReason::NotEarlier),
                    Some(_) if !self.out_index.contains_key(op) => {
                        Some(DanglingReason::OutputIndexOutOfRange)
                    }
                    Some(_) => None,
                };
                match reason {
                    Some(reason) => {
                        all_resolved = false;
                        report.dangling.push(DanglingInput {
                            txid: tx.txid,
                            input: i,
                            outpoint: *op,
                            reason,
                        });
                    }
                    None => spenders.entry(*op).or_default().push(tx.txid),
                }
            }
            if tx.coinbase || !all_resolved {
                continue;
            }
            let inputs: u128 = tx
                .inputs
                .iter()
                .map(|op| self.out_index[op].value as u128)
                .sum();
            let outputs = tx.output_total() as u128;
            if inputs < outputs {
                report.negative_fees.push(NegativeFee {
                    txid: tx.txid,
                    inputs: inputs as u64,
                    outputs: outputs as u64,
                });
            } else {
                report.fees.insert(tx.txid, (inputs - outputs) as u64);
            }
        }

        let mut double: Vec<DoubleSpend> = spenders
            .into_iter()
            .filter_map(|(outpoint, mut txids)| {
                // the same transaction listing an outpoint twice is still a double spend
                if txids.len() < 2 {
                    return None;
                }
                txids.sort_by_key(|t| self.position[t]);
                Some(DoubleSpend {
                    outpoint,
                    spenders: txids,
                })
            })
            .collect();
        double.sort_by_key(|d| d.outpoint);
        report.double_spends = double;
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DanglingReason {
    UnknownTransaction,
    OutputIndexOutOfRange,
    /// The referenced transaction does not precede the spender in log order.
    NotEarlier,
}

impl fmt::Display for DanglingReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DanglingReason::UnknownTransaction => "unknown transaction",
            DanglingReason::OutputIndexOutOfRange => "output index out of range",
            DanglingReason::NotEarlier => "referenced transaction is not earlier in the log",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DanglingInput {
    pub txid: Txid,
    pub input: usize,
    pub outpoint: OutPoint,
    pub reason: DanglingReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DoubleSpend {
    pub outpoint: OutPoint,
    /// Spending transactions in log order.
    pub spenders: Vec<Txid>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeFee {
    pub txid: Txid,
    pub inputs: u64,
    pub outputs: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub dangling: Vec<DanglingInput>,
    pub double_spends: Vec<DoubleSpend>,
    pub negative_fees: Vec<NegativeFee>,
    /// Fees of every fully resolved non-coinbase transaction with a non-negative fee.
    pub fees: BTreeMap<Txid, u64>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.dangling.is_empty() && self.double_spends.is_empty() && self.negative_fees.is_empty()
    }

    /// Sum of the per-transaction fees, each converted at its UTC day's rate.
    pub fn fees_usd(&self, log: &TxLog, rates: &RateTable) -> Result<rust_decimal::Decimal, RateError> {
        let mut total = rust_decimal::Decimal::ZERO;
        for (txid, &fee) in &self.fees {
            let tx = log.get(txid).expect("fees are keyed by logged txids");
            total += to_usd(fee, utc_date(tx.timestamp), rates)?;
        }
        Ok(total)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "status: {}",
            if self.ok() { "ok" } else { "invalid" }
        )?;
        writeln!(f, "dangling inputs: {}", self.dangling.len())?;
        for d in &self.dangling {
            writeln!(f, "  {} input {} -> {}: {}", d.txid, d.input, d.outpoint, d.reason)?;
        }
        writeln!(f, "double spends: {}", self.double_spends.len())?;
        for d in &self.double_spends {
            let txids: Vec<String> = d.spenders.iter().map(Txid::to_string).collect();
            writeln!(f, "  {} spent by {}", d.outpoint, txids.join(", "))?;
        }
        writeln!(f, "negative fees: {}", self.negative_fees.len())?;
        for n in &self.negative_fees {
            writeln!(f, "  {} inputs {} < outputs {}", n.txid, n.inputs, n.outputs)?;
        }
        let total: u128 = self.fees.values().map(|&v| v as u128).sum();
        write!(f, "total fees: {} satoshi", total)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTx {
    txid: String,
    time: Value,
    coinbase: bool,
    #[serde(rename = "in")]
    inputs: Vec<RawInput>,
    #[serde(rename = "out")]
    outputs: Vec<RawOutput>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawInput {
    tx: String,
    idx: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    addr: String,
    val: Value,
}

#[derive(Serialize)]
struct CanonicalTx<'a> {
    txid: String,
    time: i64,
    coinbase: bool,
    #[serde(rename = "in")]
    inputs: Vec<RawInput>,
    #[serde(rename = "out")]
    outputs: Vec<CanonicalOutput<'a>>,
}

#[derive(Serialize)]
struct CanonicalOutput<'a> {
    addr: &'a str,
    val: u64,
}

fn column_of(line: &str, needle: &str) -> usize {
    line.find(needle).map_or(1, |c| c + 1)
}

fn parse_txid(text: &str, line_no: usize, line: &str) -> Result<Txid, ParseError> {
    if text.len() != 64 {
        return Err(ParseError::Syntax {
            line: line_no,
            column: column_of(line, text),
            message: format!("txid must be 64 hex digits, got {} characters", text.len()),
        });
    }
    text.parse().map_err(|e| ParseError::Syntax {
        line: line_no,
        column: column_of(line, text),
        message: format!("invalid txid {:?}: {}", text, e),
    })
}

fn parse_line(line: &str, line_no: usize) -> Result<Transaction, ParseError> {
    let raw: RawTx = serde_json::from_str(line).map_err(|e| ParseError::Syntax {
        line: line_no,
        column: e.column(),
        message: e.to_string(),
    })?;

    let txid = parse_txid(&raw.txid, line_no, line)?;
    let timestamp = raw.time.as_i64().ok_or_else(|| ParseError::BadTimestamp {
        line: line_no,
        raw: raw.time.to_string(),
    })?;

    let mut inputs = Vec::with_capacity(raw.inputs.len());
    for input in &raw.inputs {
        inputs.push(OutPoint {
            txid: parse_txid(&input.tx, line_no, line)?,
            index: input.idx,
        });
    }

    let mut outputs = Vec::with_capacity(raw.outputs.len());
    let mut total: i64 = 0;
    for (i, out) in raw.outputs.into_iter().enumerate() {
        let value = match out.val.as_u64() {
            Some(v) => v,
            None => {
                let negative = out.val.as_i64().is_some_and(|v| v < 0)
                    || out.val.as_f64().is_some_and(|v| v < 0.0);
                return Err(if negative {
                    ParseError::NegativeValue {
                        line: line_no,
                        output: i,
                        value: out.val.to_string(),
                    }
                } else {
                    ParseError::Syntax {
                        line: line_no,
                        column: column_of(line, &out.val.to_string()),
                        message: format!("output {} value {} is not an integer satoshi amount", i, out.val),
                    }
                });
            }
        };
        total = i64::try_from(value)
            .ok()
            .and_then(|v| total.checked_add(v))
            .ok_or(ParseError::ValueOverflow { line: line_no })?;
        outputs.push(TxOut {
            address: out.addr,
            value,
        });
    }

    if raw.coinbase && !inputs.is_empty() {
        return Err(ParseError::Shape {
            line: line_no,
            message: "coinbase transaction must not have inputs".into(),
        });
    }
    if !raw.coinbase && inputs.is_empty() {
        return Err(ParseError::Shape {
            line: line_no,
            message: "non-coinbase transaction must have at least one input".into(),
        });
    }

    Ok(Transaction {
        txid,
        timestamp,
        coinbase: raw.coinbase,
        inputs,
        outputs,
    })
}

/// Parses a line-delimited transaction log. Blank lines are ignored; line numbers are 1-based.
pub fn parse_tx_log<R: BufRead>(reader: R) -> Result<TxLog, ParseError> {
    let mut transactions = Vec::new();
    let mut first_line: HashMap<Txid, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| ParseError::Io {
            line: line_no,
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let tx = parse_line(&line, line_no)?;
        if let Some(&first) = first_line.get(&tx.txid) {
            return Err(ParseError::DuplicateTxid {
                line: line_no,
                first_line: first,
                txid: tx.txid,
            });
        }
        first_line.insert(tx.txid, line_no);
        transactions.push(tx);
    }
    Ok(TxLog::from_transactions(transactions).expect("duplicates rejected while parsing"))
}

/// Writes the canonical form of a log: one object per line, in log order, fixed key order.
pub fn write_tx_log<W: Write>(log: &TxLog, mut writer: W) -> std::io::Result<()> {
    for tx in log.transactions() {
        write_transaction(tx, &mut writer)?;
    }
    Ok(())
}

pub fn write_transaction<W: Write>(tx: &Transaction, mut writer: W) -> std::io::Result<()> {
    let canonical = CanonicalTx {
        txid: tx.txid.to_string(),
        time: tx.timestamp,
        coinbase: tx.coinbase,
        inputs: tx
            .inputs
            .iter()
            .map(|op| RawInput {
                tx: op.txid.to_string(),
                idx: op.index,
            })
            .collect(),
        outputs: tx
            .outputs
            .iter()
            .map(|o| CanonicalOutput {
                addr: &o.address,
                val: o.value,
            })
            .collect(),
    };
    serde_json::to_writer(&mut writer, &canonical)?;
    writer.write_all(b"\n")
}

/// UTC day number (days since the Unix epoch) of a timestamp.
pub fn utc_day(timestamp: i64) -> i64 {
    timestamp.div_euclid(SECONDS_PER_DAY)
}

/// Distinct addresses paid by the outputs of `tx`.
pub fn output_addresses(tx: &Transaction) -> HashSet<&str> {
    tx.outputs.iter().map(|o| o.address.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn txid(n: u8) -> Txid {
        Txid([n; 32])
    }

    fn line(txid: Txid, time: i64, coinbase: bool, ins: &[(Txid, u32)], outs: &[(&str, u64)]) -> String {
        let ins: Vec<String> = ins
            .iter()
            .map(|(t, i)| format!(r#"{{"tx":"{}","idx":{}}}"#, t, i))
            .collect();
        let outs: Vec<String> = outs
            .iter()
            .map(|(a, v)| format!(r#"{{"addr":"{}","val":{}}}"#, a, v))
            .collect();
        format!(
            r#"{{"txid":"{}","time":{},"coinbase":{},"in":[{}],"out":[{}]}}"#,
            txid,
            time,
            coinbase,
            ins.join(","),
            outs.join(",")
        )
    }

    /// The three-transaction scenario: T pays A and B, T_A forwards A's coin, T_B spends both.
    fn trio() -> String {
        let (t, ta, tb) = (txid(1), txid(2), txid(3));
        [
            line(t, 100, true, &[], &[("A", 100_000_000), ("B", 200_000_000)]),
            line(ta, 200, false, &[(t, 0)], &[("B", 90_000_000), ("A", 10_000_000)]),
            line(tb, 300, false, &[(t, 1), (ta, 0)], &[("C", 250_000_000)]),
        ]
        .join("\n")
    }

    #[test]
    fn empty_stream() {
        let log = parse_tx_log("".as_bytes()).unwrap();
        assert!(log.is_empty());
        assert!(log.validate().ok());
    }

    #[test]
    fn single_coinbase_indexes_address() {
        let text = line(txid(9), 0, true, &[], &[("A", 5_000_000_000)]);
        let log = parse_tx_log(text.as_bytes()).unwrap();
        let hist = log.address_history("A");
        assert_eq!(hist.len(), 1);
        assert_eq!(hist[0].direction, Direction::In);
        assert_eq!(hist[0].value, 5_000_000_000);
    }

    #[test]
    fn trio_fees() {
        let log = parse_tx_log(trio().as_bytes()).unwrap();
        let report = log.validate();
        assert!(report.ok(), "{}", report);
        assert_eq!(report.fees[&txid(2)], 0);
        assert_eq!(report.fees[&txid(3)], 40_000_000);
        assert_eq!(log.fee(log.get(&txid(3)).unwrap()), Some(40_000_000));
        assert_eq!(log.output(&OutPoint { txid: txid(1), index: 1 }).unwrap().spent_by, Some(txid(3)));
    }

    #[test]
    fn double_spend_names_both_spenders() {
        let t = txid(1);
        let text = [
            line(t, 1, true, &[], &[("A", 10), ("B", 20)]),
            line(txid(2), 2, false, &[(t, 1)], &[("C", 20)]),
            line(txid(3), 3, false, &[(t, 1)], &[("D", 20)]),
        ]
        .join("\n");
        let report = parse_tx_log(text.as_bytes()).unwrap().validate();
        assert!(!report.ok());
        assert_eq!(report.double_spends.len(), 1);
        assert_eq!(report.double_spends[0].spenders, vec![txid(2), txid(3)]);
    }

    #[test]
    fn dangling_reference_reported() {
        let text = line(txid(2), 2, false, &[(txid(7), 0)], &[("C", 1)]);
        let report = parse_tx_log(text.as_bytes()).unwrap().validate();
        assert_eq!(report.dangling.len(), 1);
        assert_eq!(report.dangling[0].reason, DanglingReason::UnknownTransaction);
        assert!(report.fees.is_empty());
    }

    #[test]
    fn forward_reference_and_bad_index_are_dangling() {
        let text = [
            line(txid(1), 1, true, &[], &[("A", 10)]),
            line(txid(2), 2, false, &[(txid(1), 5)], &[("B", 1)]),
            line(txid(3), 3, false, &[(txid(4), 0)], &[("C", 1)]),
            line(txid(4), 4, true, &[], &[("D", 1)]),
        ]
        .join("\n");
        let report = parse_tx_log(text.as_bytes()).unwrap().validate();
        let reasons: Vec<_> = report.dangling.iter().map(|d| d.reason).collect();
        assert_eq!(
            reasons,
            vec![DanglingReason::OutputIndexOutOfRange, DanglingReason::NotEarlier]
        );
    }

    #[test]
    fn negative_fee_reported() {
        let text = [
            line(txid(1), 1, true, &[], &[("A", 10)]),
            line(txid(2), 2, false, &[(txid(1), 0)], &[("B", 11)]),
        ]
        .join("\n");
        let report = parse_tx_log(text.as_bytes()).unwrap().validate();
        assert_eq!(report.negative_fees.len(), 1);
        assert_eq!(report.negative_fees[0].outputs, 11);
    }

    #[test]
    fn syntax_error_carries_position() {
        let text = format!("{}\n{{\"txid\": oops}}", line(txid(1), 1, true, &[], &[("A", 1)]));
        match parse_tx_log(text.as_bytes()) {
            Err(ParseError::Syntax { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn duplicate_txid_rejected() {
        let a = line(txid(1), 1, true, &[], &[("A", 1)]);
        let text = format!("{}\n\n{}", a, a);
        match parse_tx_log(text.as_bytes()) {
            Err(ParseError::DuplicateTxid { line, first_line, .. }) => {
                assert_eq!((line, first_line), (3, 1));
            }
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn negative_value_rejected() {
        let text = line(txid(1), 1, true, &[], &[("A", 1)]).replace("\"val\":1", "\"val\":-5");
        assert!(matches!(
            parse_tx_log(text.as_bytes()),
            Err(ParseError::NegativeValue { line: 1, output: 0, .. })
        ));
    }

    #[test]
    fn bad_timestamp_rejected() {
        for bad in ["\"2014-01-01\"", "1.5", "null"] {
            let text = line(txid(1), 1, true, &[], &[("A", 1)]).replace("\"time\":1", &format!("\"time\":{}", bad));
            assert!(
                matches!(parse_tx_log(text.as_bytes()), Err(ParseError::BadTimestamp { line: 1, .. })),
                "{}",
                bad
            );
        }
    }

    #[test]
    fn output_sum_overflow_rejected() {
        let text = line(txid(1), 1, true, &[], &[("A", i64::MAX as u64), ("B", 1)]);
        assert!(matches!(
            parse_tx_log(text.as_bytes()),
            Err(ParseError::ValueOverflow { line: 1 })
        ));
    }

    #[test]
    fn coinbase_shape_enforced() {
        let text = line(txid(1), 1, true, &[(txid(2), 0)], &[("A", 1)]);
        assert!(matches!(parse_tx_log(text.as_bytes()), Err(ParseError::Shape { .. })));
        let text = line(txid(1), 1, false, &[], &[("A", 1)]);
        assert!(matches!(parse_tx_log(text.as_bytes()), Err(ParseError::Shape { .. })));
    }

    #[test]
    fn timestamp_ties_broken_by_txid() {
        let text = [
            line(txid(5), 7, true, &[], &[("A", 1)]),
            line(txid(3), 7, true, &[], &[("B", 1)]),
            line(txid(9), 6, true, &[], &[("C", 1)]),
        ]
        .join("\n");
        let log = parse_tx_log(text.as_bytes()).unwrap();
        let order: Vec<Txid> = log.transactions().iter().map(|t| t.txid).collect();
        assert_eq!(order, vec![txid(9), txid(3), txid(5)]);
    }

    #[test]
    fn canonical_round_trip() {
        let log = parse_tx_log(trio().as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_tx_log(&log, &mut buf).unwrap();
        let expected = trio() + "\n";
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), expected);
        let again = parse_tx_log(buf.as_slice()).unwrap();
        assert_eq!(again.transactions(), log.transactions());
    }
}
