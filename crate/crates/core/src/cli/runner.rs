use serde::Serialize;
use serde_json::json;

use rayon::prelude::*;

use super::config::Cell;
use crate::error::{EpiError, Result};
use crate::ineq::{CheckContext, CheckInput, CheckKind, CheckOutcome, Inputs, Verdict};

/// Result of one cell: a report, or the error that stopped it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellResult {
    Ok {
        verdict: Verdict,
        report: CheckOutcome,
    },
    Error {
        error: String,
        inputs: Inputs,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub index: usize,
    pub check: CheckKind,
    pub seed: u64,
    #[serde(flatten)]
    pub result: CellResult,
}

impl CellRecord {
    pub fn verdict(&self) -> Option<Verdict> {
        match &self.result {
            CellResult::Ok { verdict, .. } => Some(*verdict),
            CellResult::Error { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub cells: usize,
    pub holds: usize,
    pub equality: usize,
    pub violated_within_err: usize,
    pub violated: usize,
    pub errors: usize,
}

impl Summary {
    pub fn of(records: &[CellRecord]) -> Self {
        let mut s = Self {
            cells: records.len(),
            ..Self::default()
        };
        for r in records {
            match r.verdict() {
                Some(Verdict::Holds) => s.holds += 1,
                Some(Verdict::Equality) => s.equality += 1,
                Some(Verdict::ViolatedWithinErr) => s.violated_within_err += 1,
                Some(Verdict::Violated) => s.violated += 1,
                None => s.errors += 1,
            }
        }
        s
    }

    pub fn line(&self) -> String {
        format!(
            "cells {}: holds {}, equality {}, violated_within_err {}, violated {}, errors {}",
            self.cells,
            self.holds,
            self.equality,
            self.violated_within_err,
            self.violated,
            self.errors
        )
    }
}

fn dist_list(d: &[crate::dist::Distribution1D]) -> Vec<String> {
    d.iter().map(|x| x.to_string()).collect()
}

/// Description of a cell input, used when the check itself fails.
pub fn describe_input(input: &CheckInput) -> Inputs {
    let value = match input {
        CheckInput::Pair { x, y } => json!({"x": x.to_string(), "y": y.to_string()}),
        CheckInput::PairLambda { x, y, lambda } => {
            json!({"x": x.to_string(), "y": y.to_string(), "lambda": lambda})
        }
        CheckInput::Renyi { x, y, lambda, r } => {
            json!({"x": x.to_string(), "y": y.to_string(), "lambda": lambda, "r": r})
        }
        CheckInput::Young { x, y, p, q, r } => {
            json!({"x": x.to_string(), "y": y.to_string(), "p": p, "q": q, "r": r})
        }
        CheckInput::Linear { coeffs, dists } => {
            json!({"coeffs": coeffs, "dists": dist_list(dists)})
        }
        CheckInput::GaussianRows { matrix, variances } => {
            let rows: Vec<Vec<f64>> = matrix
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect();
            json!({"matrix": rows, "variances": variances})
        }
        CheckInput::Target { target } => json!({"target": target.to_string()}),
        CheckInput::RandomCovariance { dim, seed } => json!({"dim": dim, "seed": seed}),
    };
    match value {
        serde_json::Value::Object(map) => map.into_iter().collect(),
        _ => Inputs::new(),
    }
}

/// The catalog evaluator, with the cell seed installed in the context.
pub fn evaluate_cell(cell: &Cell, ctx: &CheckContext) -> Result<CheckOutcome> {
    cell.check.evaluate(&cell.input, &ctx.with_seed(cell.seed))
}

/// Runs every cell with `evaluate`, on up to `workers` threads, and returns
/// the records in cell order.
pub fn run_with<F>(
    cells: &[Cell],
    ctx: &CheckContext,
    workers: Option<usize>,
    evaluate: F,
) -> Result<Vec<CellRecord>>
where
    F: Fn(&Cell, &CheckContext) -> Result<CheckOutcome> + Sync,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(EpiError::InvalidParameter(
                "worker count must be positive".into(),
            ));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| EpiError::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let records = pool.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(index, cell)| {
                let result = match evaluate(cell, ctx) {
                    Ok(report) => CellResult::Ok {
                        verdict: report.verdict(),
                        report,
                    },
                    Err(e) => CellResult::Error {
                        error: e.to_string(),
                        inputs: describe_input(&cell.input),
                    },
                };
                CellRecord {
                    index,
                    check: cell.check,
                    seed: cell.seed,
                    result,
                }
            })
            .collect()
    });
    Ok(records)
}

pub fn run(cells: &[Cell], ctx: &CheckContext, workers: Option<usize>) -> Result<Vec<CellRecord>> {
    run_with(cells, ctx, workers, evaluate_cell)
}
