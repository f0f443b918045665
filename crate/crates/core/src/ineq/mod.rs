//! Certification layer: every check returns both sides of an inequality or
//! identity, a gap oriented so that `gap ≥ 0` means the inequality holds, an
//! error bar, a tolerance and a verdict.

mod catalog;
mod epi;
mod generalized;
mod matrix;
mod proof;
mod transport_checks;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::entropy::{EntropyMethod, GridSpec};

pub use catalog::{CheckInput, CheckKind};
pub use epi::{
    deficit_sandwich, epi_lieb, epi_power_concavity, epi_shannon, equality_diagnostics,
    reverse_epi, reverse_equivalence,
};
pub use generalized::{
    renyi_epi, renyi_exponents, young_check, young_constant, zamir_feder, zamir_feder_matrix,
};
pub use matrix::gaussian_matrix;
pub use proof::proof_chain;
pub use transport_checks::{change_of_variable, transport_pushforward};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Equality,
    ViolatedWithinErr,
    Violated,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Holds => "holds",
            Self::Equality => "equality",
            Self::ViolatedWithinErr => "violated_within_err",
            Self::Violated => "violated",
        }
    }

    /// Verdict for an inequality with oriented gap.
    pub fn for_inequality(gap: f64, err: f64, tol: f64) -> Self {
        if !gap.is_finite() {
            Self::Violated
        } else if gap.abs() <= err.max(tol) {
            Self::Equality
        } else if gap > 0.0 {
            Self::Holds
        } else if gap >= -(err + tol) {
            Self::ViolatedWithinErr
        } else {
            Self::Violated
        }
    }

    /// Verdict for an identity whose residual should vanish.
    pub fn for_identity(residual: f64, err: f64, tol: f64) -> Self {
        if !residual.is_finite() {
            Self::Violated
        } else if residual.abs() <= err.max(tol) {
            Self::Equality
        } else if residual.abs() <= err + tol {
            Self::ViolatedWithinErr
        } else {
            Self::Violated
        }
    }

    pub fn is_violation(self) -> bool {
        matches!(self, Self::Violated)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Inequality,
    Identity,
}

pub type Inputs = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub kind: ReportKind,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub err: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub inputs: Inputs,
}

impl InequalityReport {
    pub fn inequality(
        name: &str,
        lhs: f64,
        rhs: f64,
        gap: f64,
        err: f64,
        tol: f64,
        inputs: Inputs,
    ) -> Self {
        Self {
            name: name.to_string(),
            kind: ReportKind::Inequality,
            lhs,
            rhs,
            gap,
            err,
            tol,
            verdict: Verdict::for_inequality(gap, err, tol),
            inputs,
        }
    }

    /// Identity `lhs = rhs`; the gap is the residual `lhs − rhs`.
    pub fn identity(name: &str, lhs: f64, rhs: f64, err: f64, tol: f64, inputs: Inputs) -> Self {
        let gap = lhs - rhs;
        Self {
            name: name.to_string(),
            kind: ReportKind::Identity,
            lhs,
            rhs,
            gap,
            err,
            tol,
            verdict: Verdict::for_identity(gap, err, tol),
            inputs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainReport {
    pub name: String,
    pub steps: Vec<InequalityReport>,
    pub total_gap: f64,
    /// Identity relating the chain to an independently computed quantity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closure: Option<InequalityReport>,
    pub inputs: Inputs,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, Value>,
}

impl ChainReport {
    pub fn new(
        name: &str,
        steps: Vec<InequalityReport>,
        closure: Option<InequalityReport>,
        inputs: Inputs,
    ) -> Self {
        let total_gap = steps.iter().map(|s| s.gap).sum();
        Self {
            name: name.to_string(),
            steps,
            total_gap,
            closure,
            inputs,
            notes: BTreeMap::new(),
        }
    }

    pub fn step(&self, name: &str) -> Option<&InequalityReport> {
        self.steps.iter().find(|s| s.name == name)
    }

    pub fn rows(&self) -> impl Iterator<Item = &InequalityReport> {
        self.steps.iter().chain(self.closure.as_ref())
    }

    /// Worst row verdict; `equality` only when every row is an equality.
    pub fn verdict(&self) -> Verdict {
        let verdicts: Vec<Verdict> = self.rows().map(|r| r.verdict).collect();
        if verdicts.iter().all(|v| *v == Verdict::Equality) {
            Verdict::Equality
        } else {
            verdicts
                .into_iter()
                .filter(|v| *v != Verdict::Equality)
                .max()
                .unwrap_or(Verdict::Holds)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CheckOutcome {
    Report(InequalityReport),
    Chain(ChainReport),
}

impl CheckOutcome {
    pub fn name(&self) -> &str {
        match self {
            Self::Report(r) => &r.name,
            Self::Chain(c) => &c.name,
        }
    }

    pub fn verdict(&self) -> Verdict {
        match self {
            Self::Report(r) => r.verdict,
            Self::Chain(c) => c.verdict(),
        }
    }

    pub fn inputs(&self) -> &Inputs {
        match self {
            Self::Report(r) => &r.inputs,
            Self::Chain(c) => &c.inputs,
        }
    }

    pub fn inputs_mut(&mut self) -> &mut Inputs {
        match self {
            Self::Report(r) => &mut r.inputs,
            Self::Chain(c) => &mut c.inputs,
        }
    }

    /// Flattened rows as `(step, report)`; single reports have no step name.
    pub fn rows(&self) -> Vec<(Option<&str>, &InequalityReport)> {
        match self {
            Self::Report(r) => vec![(None, r)],
            Self::Chain(c) => c.rows().map(|r| (Some(r.name.as_str()), r)).collect(),
        }
    }
}

impl From<InequalityReport> for CheckOutcome {
    fn from(r: InequalityReport) -> Self {
        Self::Report(r)
    }
}

impl From<ChainReport> for CheckOutcome {
    fn from(c: ChainReport) -> Self {
        Self::Chain(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// For quantities backed by grid densities.
    pub grid: f64,
    /// For closed-form and adaptive-quadrature quantities.
    pub closed_form: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            grid: 1e-5,
            closed_form: 1e-9,
        }
    }
}

/// Numerical settings shared by all checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckContext {
    pub tolerances: Tolerances,
    pub tol_scale: f64,
    pub grid: GridSpec,
    pub ks_samples: usize,
    pub ks_alpha: f64,
    pub seed: u64,
}

impl Default for CheckContext {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            tol_scale: 1.0,
            grid: GridSpec::default(),
            ks_samples: 100_000,
            ks_alpha: 1e-3,
            seed: 0,
        }
    }
}

impl CheckContext {
    pub fn tol_for(&self, method: EntropyMethod) -> f64 {
        let base = match method {
            EntropyMethod::Grid => self.tolerances.grid,
            EntropyMethod::ClosedForm | EntropyMethod::Quadrature => self.tolerances.closed_form,
        };
        base * self.tol_scale
    }

    /// A fixed contract tolerance, scaled.
    pub fn scaled(&self, tol: f64) -> f64 {
        tol * self.tol_scale
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inequality_verdicts() {
        assert_eq!(Verdict::for_inequality(0.1, 1e-6, 1e-5), Verdict::Holds);
        assert_eq!(Verdict::for_inequality(5e-6, 1e-6, 1e-5), Verdict::Equality);
        assert_eq!(
            Verdict::for_inequality(-5e-6, 1e-6, 1e-5),
            Verdict::Equality
        );
        assert_eq!(
            Verdict::for_inequality(-1.05e-5, 1e-6, 1e-5),
            Verdict::ViolatedWithinErr
        );
        assert_eq!(
            Verdict::for_inequality(-1e-3, 1e-6, 1e-5),
            Verdict::Violated
        );
        assert_eq!(
            Verdict::for_inequality(f64::NAN, 1e-6, 1e-5),
            Verdict::Violated
        );
    }

    #[test]
    fn identity_verdicts() {
        assert_eq!(Verdict::for_identity(1e-3, 0.0, 1e-5), Verdict::Violated);
        assert_eq!(Verdict::for_identity(-2e-6, 0.0, 1e-5), Verdict::Equality);
        assert_eq!(
            Verdict::for_identity(1.5e-5, 1e-5, 1e-5),
            Verdict::ViolatedWithinErr
        );
    }

    #[test]
    fn chain_verdict_is_worst_row() {
        let eq = InequalityReport::identity("a", 1.0, 1.0, 0.0, 1e-9, Inputs::new());
        let holds = InequalityReport::inequality("b", 2.0, 1.0, 1.0, 0.0, 1e-9, Inputs::new());
        let bad = InequalityReport::inequality("c", 0.0, 1.0, -1.0, 0.0, 1e-9, Inputs::new());
        let c = ChainReport::new("x", vec![eq.clone(), eq.clone()], None, Inputs::new());
        assert_eq!(c.verdict(), Verdict::Equality);
        let c = ChainReport::new("x", vec![eq.clone(), holds.clone()], None, Inputs::new());
        assert_eq!(c.verdict(), Verdict::Holds);
        assert!((c.total_gap - 1.0).abs() < 1e-15);
        let c = ChainReport::new("x", vec![eq, holds], Some(bad), Inputs::new());
        assert_eq!(c.verdict(), Verdict::Violated);
        assert_eq!(c.rows().count(), 3);
    }
}
