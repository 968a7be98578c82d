use serde::{Deserialize, Serialize};

use super::{Aggregation, Alignment, MetricReport};

pub const REPORT_COLUMNS: [&str; 7] = [
    "AbsRel", "SqRel", "RMSE", "RMSElog", "d<1.25", "d<1.25^2", "d<1.25^3",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: u64,
    pub report: MetricReport,
}

/// Full result of evaluating a prediction directory against a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub alignment: Alignment,
    pub aggregation: Aggregation,
    pub aggregate: MetricReport,
    pub frames: Vec<FrameScore>,
    /// Frames without a prediction that were skipped.
    #[serde(default)]
    pub skipped: Vec<u64>,
}

/// The seven values at four decimals, separated by single spaces.
pub fn report_row(report: &MetricReport) -> String {
    report
        .values()
        .iter()
        .map(|v| format!("{v:.4}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Plain-text table: a header line, then `name v1 v2 ... v7` per row.
pub fn format_report(rows: &[(&str, &MetricReport)]) -> String {
    let mut out = format!("Method {}\n", REPORT_COLUMNS.join(" "));
    for (name, report) in rows {
        out.push_str(name);
        out.push(' ');
        out.push_str(&report_row(report));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_layout() {
        let r = MetricReport {
            abs_rel: 0.12344,
            sq_rel: 0.5,
            rmse: 1.0,
            rmse_log: 0.00006,
            delta1: 1.0,
            delta2: 1.0,
            delta3: 1.0,
            valid_pixel_count: 3,
            alignment: Alignment::None,
        };
        let table = format_report(&[("Ours", &r)]);
        let mut lines = table.lines();
        assert_eq!(lines.next().unwrap().split(' ').count(), 8);
        assert_eq!(
            lines.next().unwrap(),
            "Ours 0.1234 0.5000 1.0000 0.0001 1.0000 1.0000 1.0000"
        );
    }
}
