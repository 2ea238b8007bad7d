use std::collections::BTreeMap;
use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDate;
use rust_decimal::{Decimal, RoundingStrategy};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("no USD rate for {0}")]
    MissingRate(NaiveDate),
    #[error("rate table row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("rate table row {row}: duplicate date {date}")]
    DuplicateDate { row: usize, date: NaiveDate },
    #[error("rate table row {row}: rate must be positive, got {rate}")]
    NonPositive { row: usize, rate: Decimal },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Daily average USD-per-BTC rates keyed by UTC date.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateTable {
    rates: BTreeMap<NaiveDate, Decimal>,
}

impl RateTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, date: NaiveDate, rate: Decimal) -> Result<(), RateError> {
        if rate <= Decimal::ZERO {
            return Err(RateError::NonPositive { row: 0, rate });
        }
        if self.rates.insert(date, rate).is_some() {
            return Err(RateError::DuplicateDate { row: 0, date });
        }
        Ok(())
    }

    pub fn get(&self, date: NaiveDate) -> Option<Decimal> {
        self.rates.get(&date).copied()
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Reads a `date,usd_per_btc` CSV with ISO-8601 dates. Row numbers count the header as row 1.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, RateError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "usd_per_btc" {
            return Err(RateError::Malformed {
                row: 1,
                message: "header must be `date,usd_per_btc`".into(),
            });
        }
        let mut table = RateTable::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 2;
            let record = record?;
            let date = NaiveDate::parse_from_str(record[0].trim(), "%Y-%m-%d").map_err(|e| {
                RateError::Malformed {
                    row,
                    message: format!("bad date {:?}: {}", &record[0], e),
                }
            })?;
            let rate = Decimal::from_str(record[1].trim()).map_err(|e| RateError::Malformed {
                row,
                message: format!("bad rate {:?}: {}", &record[1], e),
            })?;
            table.insert(date, rate).map_err(|e| match e {
                RateError::NonPositive { rate, .. } => RateError::NonPositive { row, rate },
                RateError::DuplicateDate { date, .. } => RateError::DuplicateDate { row, date },
                other => other,
            })?;
        }
        Ok(table)
    }
}

/// Converts satoshi to USD at the given day's rate, rounded to cents half-to-even.
pub fn to_usd(value: u64, date: NaiveDate, rates: &RateTable) -> Result<Decimal, RateError> {
    let rate = rates.get(date).ok_or(RateError::MissingRate(date))?;
    let btc = Decimal::from_i128_with_scale(value as i128, 8);
    Ok((btc * rate).round_dp_with_strategy(2, RoundingStrategy::MidpointNearestEven))
}

/// UTC calendar date of a Unix timestamp.
pub fn utc_date(timestamp: i64) -> NaiveDate {
    chrono::DateTime::from_timestamp(timestamp.div_euclid(86_400) * 86_400, 0)
        .expect("timestamp within chrono range")
        .date_naive()
}
