use std::fmt::Write as _;
use std::io::Write;

use rust_decimal::{Decimal, RoundingStrategy};

use super::cv::CvConfig;
use super::metrics::{ConfusionMatrix, MetricsReport};
use super::EvalError;
use crate::learn::{CostMode, LearnerSpec};

pub const REPORT_HEADER: [&str; 12] = [
    "setting", "tp", "fn", "fp", "tn", "accuracy", "recall", "specificity", "precision", "f", "gmean", "auc",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub setting: String,
    pub matrix: ConfusionMatrix,
    pub metrics: MetricsReport,
}

/// Three decimals, half-to-even on the exact binary value; `undefined` for `None`.
pub fn format_metric(value: Option<f64>) -> String {
    match value.and_then(Decimal::from_f64_retain) {
        Some(d) => format!("{:.3}", d.round_dp_with_strategy(3, RoundingStrategy::MidpointNearestEven)),
        None => "undefined".to_string(),
    }
}

/// Everything that determines a cross-validation run, for the report's `setting` column.
pub fn describe_setting(config: &CvConfig, schema_version: &str) -> String {
    let learner = match config.learner {
        LearnerSpec::Forest(p) => format!("forest(trees={})", p.n_trees),
        other => other.name().to_string(),
    };
    let mode = match config.cost.mode {
        CostMode::Threshold => "threshold",
        CostMode::Reweight => "reweight",
    };
    let ratio = config.ratio.map_or("off".to_string(), |r| r.to_string());
    format!(
        "{} cost={}/{} ratio={} k={} seed={} schema={}",
        learner, config.cost.matrix, mode, ratio, config.k, config.seed, schema_version
    )
}

pub fn write_report_csv<W: Write>(rows: &[ReportRow], writer: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REPORT_HEADER)?;
    for r in rows {
        let m = &r.metrics;
        let c = &r.matrix;
        let mut record = vec![r.setting.clone(), c.tp.to_string(), c.fn_.to_string(), c.fp.to_string(), c.tn.to_string()];
        record.extend(
            [m.accuracy, m.recall, m.specificity, m.precision, m.f_measure, m.g_mean, m.auc]
                .into_iter()
                .map(format_metric),
        );
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Fixed-width table for terminals.
pub fn render_table(rows: &[ReportRow]) -> String {
    let width = rows.iter().map(|r| r.setting.len()).max().unwrap_or(0).max(7);
    let mut out = String::new();
    let _ = write!(out, "{:<width$}", "setting", width = width);
    for h in &REPORT_HEADER[1..] {
        let _ = write!(out, " {:>11}", h);
    }
    out.push('\n');
    for r in rows {
        let m = &r.metrics;
        let c = &r.matrix;
        let _ = write!(out, "{:<width$}", r.setting, width = width);
        for v in [c.tp, c.fn_, c.fp, c.tn] {
            let _ = write!(out, " {:>11}", v);
        }
        for v in [m.accuracy, m.recall, m.specificity, m.precision, m.f_measure, m.g_mean, m.auc] {
            let _ = write!(out, " {:>11}", format_metric(v));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{CostMatrix, CostSpec, ForestParams};

    #[test]
    fn metric_formatting() {
        // 0.0625 and 0.1875 are exact binary ties at the third decimal
        assert_eq!(format_metric(Some(0.0625)), "0.062");
        assert_eq!(format_metric(Some(0.1875)), "0.188");
        assert_eq!(format_metric(Some(1.0)), "1.000");
        assert_eq!(format_metric(Some(31.0 / 32.0)), "0.969");
        assert_eq!(format_metric(None), "undefined");
    }

    #[test]
    fn csv_layout() {
        let matrix = ConfusionMatrix::new(0, 0, 0, 5);
        let rows = [ReportRow {
            setting: "x".into(),
            matrix,
            metrics: matrix.metrics(),
        }];
        let mut buf = Vec::new();
        write_report_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "setting,tp,fn,fp,tn,accuracy,recall,specificity,precision,f,gmean,auc\n\
             x,0,0,0,5,1.000,undefined,1.000,undefined,undefined,undefined,undefined\n"
        );
        assert!(render_table(&rows).contains("undefined"));
    }

    #[test]
    fn setting_mentions_seed_and_schema() {
        let cfg = CvConfig {
            learner: LearnerSpec::Forest(ForestParams::default()),
            ratio: None,
            cost: CostSpec::threshold(CostMatrix::new(20.0, 1.0).unwrap()),
            k: 10,
            seed: 1,
        };
        assert_eq!(
            describe_setting(&cfg, "v1"),
            "forest(trees=100) cost=20:1/threshold ratio=off k=10 seed=1 schema=v1"
        );
    }
}
