use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use super::config::ExperimentConfig;
use super::runner::{CellRecord, CellResult, Summary};

pub const CSV_COLUMNS: [&str; 9] = [
    "check", "step", "inputs", "lhs", "rhs", "gap", "err", "tol", "verdict",
];

#[derive(Debug, Serialize)]
pub struct RunDocument<'a> {
    pub schema_version: u32,
    pub config_echo: Value,
    pub reports: &'a [CellRecord],
    pub summary: Summary,
}

/// The config as run, with the effective seed and tolerance scale.
pub fn config_echo(config: &ExperimentConfig, tol_scale: f64) -> Value {
    let mut echo = serde_json::to_value(config).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut echo {
        map.insert("tol_scale".into(), tol_scale.into());
    }
    echo
}

pub fn write_json<W: Write>(mut w: W, doc: &RunDocument<'_>) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, doc)?;
    w.write_all(b"\n")
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// One row per report row (chain steps and closures included), in cell order.
pub fn write_csv<W: Write>(w: W, records: &[CellRecord]) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_COLUMNS)?;
    for rec in records {
        let check = rec.check.name();
        match &rec.result {
            CellResult::Ok { report, .. } => {
                let inputs = serde_json::to_string(report.inputs())?;
                for (step, row) in report.rows() {
                    out.write_record([
                        check,
                        step.unwrap_or(""),
                        &inputs,
                        &num(row.lhs),
                        &num(row.rhs),
                        &num(row.gap),
                        &num(row.err),
                        &num(row.tol),
                        row.verdict.as_str(),
                    ])?;
                }
            }
            CellResult::Error { inputs, .. } => {
                let inputs = serde_json::to_string(inputs)?;
                out.write_record([check, "", &inputs, "", "", "", "", "", "error"])?;
            }
        }
    }
    out.flush()
}
