//! Experiment configuration (`schema = 1`, TOML) and its expansion into cells.

use std::path::Path;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::{DistSpec, Distribution1D};
use crate::entropy::GridSpec;
use crate::gaussian::random_orthonormal_rows;
use crate::ineq::{CheckInput, CheckKind, Tolerances};
use crate::numerics::grid::MIN_POINTS;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    #[serde(default)]
    pub format: OutputFormat,
}

/// `"cross"`, `{ cross = [names] }` or an explicit list of `[x, y]` names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PairsSpec {
    Mode(String),
    CrossOf { cross: Vec<String> },
    List(Vec<[String; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSpec {
    pub coeffs: Vec<f64>,
    pub dists: Vec<String>,
}

/// `count` random unit vectors over the named components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomLinearSpec {
    pub count: usize,
    pub dists: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianRowsSpec {
    pub matrix: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
}

/// `count` random matrices with `rows` orthonormal rows over Gaussian components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomGaussianRowsSpec {
    pub count: usize,
    pub rows: usize,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMatrixSpec {
    pub dims: Vec<usize>,
    pub draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub distributions: IndexMap<String, DistSpec>,
    pub pairs: Option<PairsSpec>,
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// `(p, q, r)` triples; `renyi_epi` uses the distinct `r` values.
    #[serde(default)]
    pub exponents: Vec<[f64; 3]>,
    #[serde(default)]
    pub linear: Vec<LinearSpec>,
    pub random_linear: Option<RandomLinearSpec>,
    #[serde(default)]
    pub gaussian_rows: Vec<GaussianRowsSpec>,
    pub random_gaussian_rows: Option<RandomGaussianRowsSpec>,
    pub gaussian_matrix: Option<GaussianMatrixSpec>,
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

/// One unit of work: a check applied to one input, with its own seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub check: CheckKind,
    pub input: CheckInput,
    pub seed: u64,
}

/// Seed for cell `index`, independent of scheduling.
pub fn cell_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

const RANDOM_LINEAR_STREAM: u64 = u64::MAX;
const RANDOM_ROWS_STREAM: u64 = u64::MAX - 1;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn dist(&self, field: &str, name: &str) -> Result<Distribution1D, ConfigError> {
        let spec = self
            .distributions
            .get(name)
            .ok_or_else(|| invalid(field, format!("unknown distribution `{name}`")))?;
        Distribution1D::from_spec(spec)
            .map_err(|e| invalid(format!("distributions.{name}"), e.to_string()))
    }

    fn needs(&self, field: &str, present: bool) -> Result<(), ConfigError> {
        if present {
            return Ok(());
        }
        let users: Vec<&str> = self
            .checks
            .iter()
            .filter(|k| uses(**k, field))
            .map(|k| k.name())
            .collect();
        if users.is_empty() {
            Ok(())
        } else {
            Err(invalid(field, format!("required by {}", users.join(", "))))
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(
                "schema",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema
                ),
            ));
        }
        if self.checks.is_empty() {
            return Err(invalid("checks", "at least one check is required"));
        }
        for name in self.distributions.keys() {
            self.dist(&format!("distributions.{name}"), name)?;
        }
        self.pair_names()?;
        for (i, l) in self.lambdas.iter().enumerate() {
            if !(l.is_finite() && *l > 0.0 && *l < 1.0) {
                return Err(invalid(
                    format!("lambdas[{i}]"),
                    format!("{l} is not in (0, 1)"),
                ));
            }
        }
        for (i, e) in self.exponents.iter().enumerate() {
            if e.iter().any(|v| !(v.is_finite() && *v > 0.0 && *v != 1.0)) {
                return Err(invalid(
                    format!("exponents[{i}]"),
                    format!("{e:?}: exponents must be positive and not 1"),
                ));
            }
        }
        for (i, lin) in self.linear.iter().enumerate() {
            let field = format!("linear[{i}]");
            if lin.coeffs.len() != lin.dists.len() || lin.coeffs.is_empty() {
                return Err(invalid(
                    field,
                    "coeffs and dists must be non-empty and of equal length",
                ));
            }
            for (j, d) in lin.dists.iter().enumerate() {
                self.dist(&format!("{field}.dists[{j}]"), d)?;
            }
        }
        if let Some(r) = &self.random_linear {
            if r.count == 0 || r.dists.is_empty() {
                return Err(invalid(
                    "random_linear",
                    "count and dists must be non-empty",
                ));
            }
            for (j, d) in r.dists.iter().enumerate() {
                self.dist(&format!("random_linear.dists[{j}]"), d)?;
            }
        }
        for (i, g) in self.gaussian_rows.iter().enumerate() {
            let field = format!("gaussian_rows[{i}]");
            let cols = g.variances.len();
            if g.matrix.is_empty() || g.matrix.iter().any(|r| r.len() != cols) {
                return Err(invalid(
                    field,
                    "matrix rows must all have one entry per variance",
                ));
            }
            positive_variances(&field, &g.variances)?;
        }
        if let Some(r) = &self.random_gaussian_rows {
            if r.count == 0 || r.rows == 0 || r.rows > r.variances.len() {
                return Err(invalid(
                    "random_gaussian_rows",
                    "need count > 0 and 0 < rows <= number of variances",
                ));
            }
            positive_variances("random_gaussian_rows", &r.variances)?;
        }
        if let Some(m) = &self.gaussian_matrix {
            if m.draws == 0 || m.dims.is_empty() || m.dims.contains(&0) {
                return Err(invalid(
                    "gaussian_matrix",
                    "dims must be positive and draws > 0",
                ));
            }
        }
        for (i, t) in self.targets.iter().enumerate() {
            self.dist(&format!("targets[{i}]"), t)?;
        }
        let g = self.grid;
        if !(g.half_width_sigmas.is_finite() && g.half_width_sigmas > 0.0) {
            return Err(invalid("grid.half_width_sigmas", "must be positive"));
        }
        if !g.points.is_power_of_two() || g.points < MIN_POINTS {
            return Err(invalid(
                "grid.points",
                format!("must be a power of two >= {MIN_POINTS}"),
            ));
        }
        let t = self.tolerances;
        if !(t.grid > 0.0 && t.closed_form > 0.0) {
            return Err(invalid("tolerances", "tolerances must be positive"));
        }

        self.needs("pairs", self.pairs.is_some())?;
        self.needs("lambdas", !self.lambdas.is_empty())?;
        self.needs("exponents", !self.exponents.is_empty())?;
        self.needs("targets", !self.targets.is_empty())?;
        self.needs("gaussian_matrix", self.gaussian_matrix.is_some())?;
        let has_linear = !self.linear.is_empty()
            || self.random_linear.is_some()
            || !self.gaussian_rows.is_empty()
            || self.random_gaussian_rows.is_some();
        self.needs("linear", has_linear)?;
        Ok(())
    }

    fn pair_names(&self) -> Result<Vec<(String, String)>, ConfigError> {
        let cross = |names: Vec<String>| {
            names
                .iter()
                .flat_map(|x| names.iter().map(move |y| (x.clone(), y.clone())))
                .collect::<Vec<_>>()
        };
        let pairs = match &self.pairs {
            None => Vec::new(),
            Some(PairsSpec::Mode(m)) if m == "cross" => {
                cross(self.distributions.keys().cloned().collect())
            }
            Some(PairsSpec::Mode(m)) => {
                return Err(invalid(
                    "pairs",
                    format!("unknown mode `{m}`; use \"cross\", {{ cross = [...] }} or a list"),
                ))
            }
            Some(PairsSpec::CrossOf { cross: names }) => cross(names.clone()),
            Some(PairsSpec::List(list)) => {
                list.iter().map(|[x, y]| (x.clone(), y.clone())).collect()
            }
        };
        for (i, (x, y)) in pairs.iter().enumerate() {
            self.dist(&format!("pairs[{i}][0]"), x)?;
            self.dist(&format!("pairs[{i}][1]"), y)?;
        }
        Ok(pairs)
    }

    fn pairs(&self) -> Result<Vec<(Distribution1D, Distribution1D)>, ConfigError> {
        self.pair_names()?
            .into_iter()
            .map(|(x, y)| Ok((self.dist("pairs", &x)?, self.dist("pairs", &y)?)))
            .collect()
    }

    fn renyi_orders(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for [_, _, r] in &self.exponents {
            if !out.contains(r) {
                out.push(*r);
            }
        }
        out
    }

    fn zamir_feder_inputs(&self) -> Result<Vec<CheckInput>, ConfigError> {
        let mut inputs = Vec::new();
        for lin in &self.linear {
            inputs.push(CheckInput::Linear {
                coeffs: lin.coeffs.clone(),
                dists: lin
                    .dists
                    .iter()
                    .map(|d| self.dist("linear", d))
                    .collect::<Result<_, _>>()?,
            });
        }
        if let Some(r) = &self.random_linear {
            let dists: Vec<Distribution1D> = r
                .dists
                .iter()
                .map(|d| self.dist("random_linear", d))
                .collect::<Result<_, _>>()?;
            let mut rng = stream_rng(self.seed, RANDOM_LINEAR_STREAM);
            for _ in 0..r.count {
                let raw: Vec<f64> = (0..dists.len())
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
                inputs.push(CheckInput::Linear {
                    coeffs: raw.iter().map(|a| a / norm).collect(),
                    dists: dists.clone(),
                });
            }
        }
        for g in &self.gaussian_rows {
            let (rows, cols) = (g.matrix.len(), g.variances.len());
            inputs.push(CheckInput::GaussianRows {
                matrix: DMatrix::from_fn(rows, cols, |i, j| g.matrix[i][j]),
                variances: g.variances.clone(),
            });
        }
        if let Some(r) = &self.random_gaussian_rows {
            let mut rng = stream_rng(self.seed, RANDOM_ROWS_STREAM);
            for _ in 0..r.count {
                let matrix = random_orthonormal_rows(r.rows, r.variances.len(), &mut rng)
                    .map_err(|e| invalid("random_gaussian_rows", e.to_string()))?;
                inputs.push(CheckInput::GaussianRows {
                    matrix,
                    variances: r.variances.clone(),
                });
            }
        }
        Ok(inputs)
    }

    /// All cells in config order: checks as listed; pairs outermost, then
    /// `λ`, then exponents.
    pub fn cells(&self) -> Result<Vec<Cell>, ConfigError> {
        let pairs = self.pairs()?;
        let targets: Vec<Distribution1D> = self
            .targets
            .iter()
            .map(|t| self.dist("targets", t))
            .collect::<Result<_, _>>()?;
        let mut inputs: Vec<(CheckKind, CheckInput)> = Vec::new();
        for &check in &self.checks {
            let mut push = |input| inputs.push((check, input));
            match check {
                CheckKind::EpiShannon => {
                    for (x, y) in &pairs {
                        push(CheckInput::Pair {
                            x: x.clone(),
                            y: y.clone(),
                        });
                    }
                }
                CheckKind::EpiLieb
                | CheckKind::EpiPowerConcavity
                | CheckKind::ReverseEpi
                | CheckKind::DeficitSandwich
                | CheckKind::ProofChain
                | CheckKind::EqualityDiagnostics
                | CheckKind::ReverseEquivalence => {
                    for (x, y) in &pairs {
                        for &lambda in &self.lambdas {
                            push(CheckInput::PairLambda {
                                x: x.clone(),
                                y: y.clone(),
                                lambda,
                            });
                        }
                    }
                }
                CheckKind::RenyiEpi => {
                    for (x, y) in &pairs {
                        for &lambda in &self.lambdas {
                            for r in self.renyi_orders() {
                                push(CheckInput::Renyi {
                                    x: x.clone(),
                                    y: y.clone(),
                                    lambda,
                                    r,
                                });
                            }
                        }
                    }
                }
                CheckKind::YoungCheck => {
                    for (x, y) in &pairs {
                        for &[p, q, r] in &self.exponents {
                            push(CheckInput::Young {
                                x: x.clone(),
                                y: y.clone(),
                                p,
                                q,
                                r,
                            });
                        }
                    }
                }
                CheckKind::ZamirFeder => {
                    for input in self.zamir_feder_inputs()? {
                        push(input);
                    }
                }
                CheckKind::ChangeOfVariable | CheckKind::TransportPushforward => {
                    for t in &targets {
                        push(CheckInput::Target { target: t.clone() });
                    }
                }
                CheckKind::GaussianMatrix => {
                    if let Some(m) = &self.gaussian_matrix {
                        for &dim in &m.dims {
                            for draw in 0..m.draws {
                                let seed = cell_seed(self.seed ^ dim as u64, draw as u64);
                                push(CheckInput::RandomCovariance { dim, seed });
                            }
                        }
                    }
                }
            }
        }
        Ok(inputs
            .into_iter()
            .enumerate()
            .map(|(i, (check, input))| Cell {
                check,
                input,
                seed: cell_seed(self.seed, i as u64),
            })
            .collect())
    }
}

fn positive_variances(field: &str, v: &[f64]) -> Result<(), ConfigError> {
    if v.is_empty() || v.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(invalid(field, "variances must be positive"));
    }
    Ok(())
}

fn uses(check: CheckKind, field: &str) -> bool {
    use CheckKind as K;
    match field {
        "pairs" => !matches!(
            check,
            K::ZamirFeder | K::ChangeOfVariable | K::TransportPushforward | K::GaussianMatrix
        ),
        "lambdas" => matches!(
            check,
            K::EpiLieb
                | K::EpiPowerConcavity
                | K::ReverseEpi
                | K::DeficitSandwich
                | K::ProofChain
                | K::EqualityDiagnostics
                | K::ReverseEquivalence
                | K::RenyiEpi
        ),
        "exponents" => matches!(check, K::RenyiEpi | K::YoungCheck),
        "targets" => matches!(check, K::ChangeOfVariable | K::TransportPushforward),
        "gaussian_matrix" => check == K::GaussianMatrix,
        "linear" => check == K::ZamirFeder,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema = 1
checks = ["epi_lieb", "proof_chain"]
lambdas = [0.25, 0.5]
pairs = "cross"

[distributions]
g = { family = "gaussian", variance = 1.0 }
lap = { family = "laplace", scale = 1.0 }
"#;

    #[test]
    fn expands_in_config_order() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        let cells = c.cells().unwrap();
        assert_eq!(cells.len(), 2 * 4 * 2);
        assert!(cells[..8].iter().all(|c| c.check == CheckKind::EpiLieb));
        match &cells[1].input {
            CheckInput::PairLambda { x, y, lambda } => {
                assert!(x.is_gaussian() && y.is_gaussian());
                assert_eq!(*lambda, 0.5);
            }
            other => panic!("{other:?}"),
        }
        match &cells[2].input {
            CheckInput::PairLambda { y, .. } => assert!(y.has_kink()),
            other => panic!("{other:?}"),
        }
        let seeds: std::collections::BTreeSet<u64> = cells.iter().map(|c| c.seed).collect();
        assert_eq!(seeds.len(), cells.len());
    }

    #[test]
    fn rejects_unknown_check_with_location() {
        let text = MINIMAL.replace("\"proof_chain\"", "\"epi_magic\"");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("epi_magic") && err.contains("line 3"), "{err}");
    }

    #[test]
    fn field_diagnostics() {
        let cases = [
            (MINIMAL.replace("0.25", "1.0"), "lambdas[0]"),
            (
                MINIMAL.replace("pairs = \"cross\"", "pairs = [[\"g\", \"cauchy\"]]"),
                "pairs[0][1]",
            ),
            (MINIMAL.replace("pairs = \"cross\"", ""), "pairs"),
            (MINIMAL.replace("schema = 1", "schema = 2"), "schema"),
            (
                MINIMAL.replace("variance = 1.0", "variance = -1.0"),
                "distributions.g",
            ),
            (MINIMAL.replace("lambdas = [0.25, 0.5]", ""), "lambdas"),
        ];
        for (text, field) in cases {
            let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
            assert!(err.starts_with(field), "{field}: {err}");
        }
    }

    #[test]
    fn random_inputs_are_seeded() {
        let text = r#"
schema = 1
checks = ["zamir_feder"]
seed = 5
random_linear = { count = 3, dists = ["lap", "lap"] }
random_gaussian_rows = { count = 2, rows = 2, variances = [1.0, 2.0, 3.0] }

[distributions]
lap = { family = "laplace", scale = 1.0 }
"#;
        let a = ExperimentConfig::from_toml(text).unwrap().cells().unwrap();
        let b = ExperimentConfig::from_toml(text).unwrap().cells().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        let c = ExperimentConfig::from_toml(&text.replace("seed = 5", "seed = 6"))
            .unwrap()
            .cells()
            .unwrap();
        assert_ne!(a[0].input, c[0].input);
        match &a[0].input {
            CheckInput::Linear { coeffs, .. } => {
                assert!((coeffs.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }
}
