//! The acceptance suite: thirteen end-to-end criteria, each reported as one
//! pass/fail line. Used by `epi-lab selftest` and the `acceptance` test target.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::cli::{self, ExperimentConfig, OutputFormat, RunOptions};
use crate::dist::Distribution1D;
use crate::entropy::{diff_entropy, entropy_power, rotated_pair};
use crate::error::{EpiError, Result};
use crate::gaussian::{det_mean_chain, random_orthonormal_rows, CovMatrix};
use crate::ineq::{self, ChainReport, CheckContext};
use crate::transport::{verify_change_of_variable_2d, KnotheMap2D, Target2D};

pub const STANDARD_CONFIG: &str = include_str!("../configs/standard.toml");

const LAMBDAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const MATRIX_DIMS: [usize; 4] = [1, 2, 3, 5];
const MATRIX_SEEDS: u64 = 100;
const MI_LAPLACE_HALF: f64 = 0.096_799_818_236_751_235;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{mark}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

fn outcome(id: u8, name: &'static str, r: Result<(bool, String)>) -> CriterionResult {
    let (passed, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult {
        id,
        name,
        passed,
        detail,
    }
}

fn gauss(v: f64) -> Distribution1D {
    Distribution1D::gaussian(v).expect("positive variance")
}

/// Gaussian, Laplace, logistic and the bimodal mixture, all at unit scale.
pub fn family() -> Vec<Distribution1D> {
    vec![
        gauss(1.0),
        Distribution1D::laplace(1.0).expect("scale"),
        Distribution1D::logistic(1.0).expect("scale"),
        Distribution1D::mixture(&[0.5, 0.5], &[-1.5, 1.5], &[0.6, 0.6]).expect("mixture"),
    ]
}

fn family_pairs() -> Vec<(Distribution1D, Distribution1D)> {
    let f = family();
    f.iter()
        .flat_map(|x| f.iter().map(move |y| (x.clone(), y.clone())))
        .collect()
}

fn sweep() -> Vec<(Distribution1D, Distribution1D, f64)> {
    family_pairs()
        .into_iter()
        .flat_map(|(x, y)| LAMBDAS.iter().map(move |&l| (x.clone(), y.clone(), l)))
        .collect()
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn gaussian_calibration() -> Result<(bool, String)> {
    let h = diff_entropy(&gauss(1.0))?.nats;
    let mut worst: f64 = (h - 1.418_938_5).abs();
    for v in [0.25, 1.0, 4.0] {
        worst = worst.max((entropy_power(&gauss(v))? - v).abs());
    }
    Ok((
        worst <= 1e-7,
        format!("h(N(0,1)) = {h:.9}, worst deviation {worst:.2e}"),
    ))
}

fn equality_case() -> Result<(bool, String)> {
    let ctx = CheckContext::default();
    let g = gauss(1.0);
    let mut worst: f64 = 0.0;
    for l in LAMBDAS {
        worst = worst.max(ineq::epi_lieb(&g, &g, l, &ctx)?.gap.abs());
        worst = worst.max(ineq::reverse_epi(&g, &g, l, &ctx)?.gap.abs());
        worst = worst.max(max_abs(
            ineq::deficit_sandwich(&g, &g, l, &ctx)?
                .rows()
                .map(|r| r.gap),
        ));
        worst = worst.max(max_abs(
            ineq::proof_chain(&g, &g, l, &ctx)?.rows().map(|r| r.gap),
        ));
    }
    Ok((
        worst <= 1e-6,
        format!("max |gap| {worst:.2e} over 9 lambdas"),
    ))
}

fn unequal_power() -> Result<(bool, String)> {
    let ctx = CheckContext::default();
    let (x, y) = (gauss(1.0), gauss(4.0));
    let lieb = ineq::epi_lieb(&x, &y, 0.5, &ctx)?.gap;
    let rev = ineq::reverse_epi(&x, &y, 0.5, &ctx)?.gap;
    let mi = rotated_pair(&x, &y, 0.5)?.mutual_info.nats;
    let deficit = ineq::deficit_sandwich(&x, &y, 0.5, &ctx)?;
    let ok = (lieb - 0.111_571_8).abs() <= 1e-6
        && (rev - 0.111_571_6).abs() <= 1e-5
        && (mi - 0.223_143_6).abs() <= 1e-6
        && deficit.steps.iter().all(|s| s.gap >= 0.0);
    Ok((ok, format!("lieb {lieb:.7}, reverse {rev:.7}, MI {mi:.7}")))
}

fn matrix_chains() -> Result<Vec<ChainReport>> {
    let ctx = CheckContext::default();
    let cells: Vec<(usize, u64)> = MATRIX_DIMS
        .iter()
        .flat_map(|&n| (0..MATRIX_SEEDS).map(move |s| (n, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(n, s)| ineq::gaussian_matrix(n, s, &ctx))
        .collect()
}

fn harmonic_identity() -> Result<(bool, String)> {
    let chains = matrix_chains()?;
    let worst = max_abs(
        chains
            .iter()
            .filter_map(|c| c.step("harmonic_identity"))
            .map(|r| r.gap),
    );
    Ok((
        worst < 1e-10,
        format!("max Frobenius gap {worst:.2e} over {} pairs", chains.len()),
    ))
}

fn determinant_chain() -> Result<(bool, String)> {
    let chains = matrix_chains()?;
    let slack = chains
        .iter()
        .flat_map(|c| {
            ["harmonic_le_geometric", "ky_fan"]
                .into_iter()
                .filter_map(|s| c.step(s))
        })
        .map(|r| r.gap)
        .fold(f64::INFINITY, f64::min);
    let mut equal_worst: f64 = 0.0;
    for &n in &MATRIX_DIMS {
        for seed in 0..MATRIX_SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = CovMatrix::random(n, &mut rng)?;
            let c = det_mean_chain(&k, &k, 0.3)?;
            equal_worst = equal_worst
                .max((c.log_geometric - c.log_harmonic).abs())
                .max((c.log_arithmetic - c.log_geometric).abs());
        }
    }
    Ok((
        slack >= -1e-12 && equal_worst <= 1e-12,
        format!("min slack {slack:.2e}; K_X = K_Y chain spread {equal_worst:.2e}"),
    ))
}

fn change_of_variable() -> Result<(bool, String)> {
    let ctx = CheckContext::default();
    let mut targets = vec![gauss(4.0)];
    targets.extend(family().into_iter().skip(1));
    let one_d = targets
        .iter()
        .map(|t| Ok(ineq::change_of_variable(t, &ctx)?.gap))
        .collect::<Result<Vec<f64>>>()?;
    let std = Distribution1D::standard_gaussian();
    let source = [std.clone(), std.clone()];
    let maps = [
        Target2D::Product(std.clone(), std.clone()),
        Target2D::Gaussian([[4.0, 0.0], [0.0, 9.0]]),
        Target2D::Gaussian([[2.0, 1.0], [1.0, 2.0]]),
    ];
    let two_d = maps
        .into_iter()
        .map(|t| Ok(verify_change_of_variable_2d(&KnotheMap2D::new(source.clone(), t)?)?.residual))
        .collect::<Result<Vec<f64>>>()?;
    let (w1, w2) = (max_abs(one_d), max_abs(two_d));
    Ok((
        w1 < 1e-6 && w2 < 1e-5,
        format!("max 1-D residual {w1:.2e}, max 2-D residual {w2:.2e}"),
    ))
}

fn transport_validity() -> Result<(bool, String)> {
    let ctx = CheckContext::default();
    let mut targets = vec![gauss(4.0)];
    targets.extend(family().into_iter().skip(1));
    let chains = targets
        .par_iter()
        .enumerate()
        .map(|(i, t)| ineq::transport_pushforward(t, &ctx.with_seed(1000 + i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let ks_ok = chains
        .iter()
        .all(|c| c.step("ks_statistic").is_some_and(|r| r.gap > 0.0));
    let fd = chains
        .iter()
        .filter_map(|c| c.step("derivative_finite_difference"))
        .map(|r| r.lhs)
        .fold(0.0, f64::max);
    let ks = chains
        .iter()
        .filter_map(|c| c.step("ks_statistic"))
        .map(|r| r.lhs / r.rhs)
        .fold(0.0, f64::max);
    Ok((
        ks_ok && fd < 1e-5,
        format!("max KS statistic / critical {ks:.3}, max relative T' error {fd:.2e}"),
    ))
}

fn proof_chains() -> Result<Vec<ChainReport>> {
    let ctx = CheckContext::default();
    sweep()
        .par_iter()
        .map(|(x, y, l)| ineq::proof_chain(x, y, *l, &ctx))
        .collect()
}

fn telescoping() -> Result<(bool, String)> {
    let chains = proof_chains()?;
    let closure = max_abs(
        chains
            .iter()
            .filter_map(|c| c.closure.as_ref())
            .map(|r| r.gap),
    );
    let min_step = chains
        .iter()
        .flat_map(|c| c.steps.iter().map(|s| s.gap))
        .fold(f64::INFINITY, f64::min);
    let violations = chains.iter().filter(|c| c.verdict().is_violation()).count();
    let complete = chains.iter().all(|c| c.closure.is_some());
    Ok((
        complete && closure < 1e-4 && min_step >= -1e-6 && violations == 0 && chains.len() >= 144,
        format!(
            "{} cells, max telescoping residual {closure:.2e}, min step gap {min_step:.2e}, {violations} violations",
            chains.len()
        ),
    ))
}

fn reverse_forward() -> Result<(bool, String)> {
    let ctx = CheckContext::default();
    let chains = sweep()
        .par_iter()
        .map(|(x, y, l)| ineq::reverse_equivalence(x, y, *l, &ctx))
        .collect::<Result<Vec<_>>>()?;
    let worst = max_abs(
        chains
            .iter()
            .filter_map(|c| c.closure.as_ref())
            .map(|r| r.gap),
    );
    Ok((
        worst <= 1e-5,
        format!("max disagreement {worst:.2e} over {} cells", chains.len()),
    ))
}

fn bernstein() -> Result<(bool, String)> {
    let g = gauss(1.0);
    let lap = Distribution1D::laplace(1.0)?;
    let gaussian_mi = LAMBDAS
        .iter()
        .map(|&l| Ok(rotated_pair(&g, &g, l)?.mutual_info.nats))
        .collect::<Result<Vec<f64>>>()?;
    let g_worst = max_abs(gaussian_mi);
    let mi = rotated_pair(&lap, &lap, 0.5)?.mutual_info;
    let ok = g_worst < 1e-6 && mi.nats > 10.0 * mi.err && (mi.nats - MI_LAPLACE_HALF).abs() < 5e-6;
    Ok((
        ok,
        format!(
            "Gaussian MI max {g_worst:.2e}; Laplace MI {:.7} (err {:.1e})",
            mi.nats, mi.err
        ),
    ))
}

fn zamir_feder() -> Result<(bool, String)> {
    let ctx = CheckContext::default();
    let lap = Distribution1D::laplace(1.0)?;
    let logi = Distribution1D::logistic(1.0)?;
    let dists = [
        vec![lap.clone(), logi.clone(), lap.clone()],
        vec![logi.clone(), lap, logi],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut single = f64::INFINITY;
    for k in 0..20 {
        let raw: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = raw.iter().map(|a| a * a).sum::<f64>().sqrt();
        let a: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        single = single.min(ineq::zamir_feder(&a, &dists[k % 2], &ctx)?.gap);
    }
    let mut multi = f64::INFINITY;
    for _ in 0..20 {
        let a = random_orthonormal_rows(2, 3, &mut rng)?;
        multi = multi.min(ineq::zamir_feder_matrix(&a, &[1.0, 2.0, 3.0], &ctx)?.gap);
    }
    Ok((
        single >= -1e-5 && multi >= -1e-12,
        format!("min single-row gap {single:.3e}, min Gaussian multi-row gap {multi:.3e}"),
    ))
}

fn renyi_young() -> Result<(bool, String)> {
    let ctx = CheckContext::default();
    let pairs = family_pairs();
    let young = pairs
        .par_iter()
        .flat_map(|(x, y)| {
            [(4.0 / 3.0, 4.0 / 3.0, 2.0), (0.8, 0.8, 2.0 / 3.0)]
                .into_par_iter()
                .map(move |(p, q, r)| ineq::young_check(x, y, p, q, r, &ctx).map(|r| r.gap))
        })
        .collect::<Result<Vec<f64>>>()?;
    let renyi = pairs
        .par_iter()
        .flat_map(|(x, y)| {
            LAMBDAS.into_par_iter().flat_map(move |l| {
                [2.0, 2.0 / 3.0]
                    .into_par_iter()
                    .map(move |r| ineq::renyi_epi(x, y, l, r, &ctx).map(|r| r.gap))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let g = gauss(1.0);
    let unit = LAMBDAS
        .iter()
        .flat_map(|&l| [2.0, 2.0 / 3.0].map(|r| (l, r)))
        .map(|(l, r)| Ok(ineq::renyi_epi(&g, &g, l, r, &ctx)?.gap))
        .collect::<Result<Vec<f64>>>()?;
    let y_min = young.iter().copied().fold(f64::INFINITY, f64::min);
    let r_min = renyi.iter().copied().fold(f64::INFINITY, f64::min);
    let u_max = max_abs(unit);
    Ok((
        y_min >= -1e-5 && r_min >= -1e-5 && u_max <= 1e-5,
        format!("min Young slack {y_min:.3e}, min Renyi gap {r_min:.3e}, unit-Gaussian |gap| {u_max:.1e}"),
    ))
}

fn render(
    config: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<(Vec<u8>, Vec<u8>, cli::Summary)> {
    let opts = RunOptions {
        workers,
        ..RunOptions::default()
    };
    let run = cli::execute(config, opts).map_err(|e| EpiError::InvalidParameter(e.to_string()))?;
    let (mut json, mut csv) = (Vec::new(), Vec::new());
    let io = |e: std::io::Error| EpiError::InvalidParameter(format!("rendering report: {e}"));
    run.write(&mut json, OutputFormat::Json).map_err(io)?;
    run.write(&mut csv, OutputFormat::Csv).map_err(io)?;
    Ok((json, csv, run.summary))
}

fn determinism() -> Result<(bool, String)> {
    let config = ExperimentConfig::from_toml(STANDARD_CONFIG)
        .map_err(|e| EpiError::InvalidParameter(e.to_string()))?;
    let (j1, c1, summary) = render(&config, None)?;
    let (j2, c2, _) = render(&config, Some(2))?;
    let same = j1 == j2 && c1 == c2;
    Ok((
        same && summary.violated == 0 && summary.errors == 0,
        format!(
            "JSON {} bytes, CSV {} bytes, identical: {same}; {}",
            j1.len(),
            c1.len(),
            summary.line()
        ),
    ))
}

pub type Criterion = (u8, &'static str, fn() -> Result<(bool, String)>);

pub const CRITERIA: [Criterion; 13] = [
    (1, "Gaussian calibration", gaussian_calibration),
    (2, "equality case", equality_case),
    (3, "Gaussian unequal power", unequal_power),
    (4, "harmonic-mean identity", harmonic_identity),
    (5, "determinant chain and Ky Fan", determinant_chain),
    (6, "change of variable", change_of_variable),
    (7, "transport validity", transport_validity),
    (8, "proof-chain telescoping", telescoping),
    (9, "reverse/forward equivalence", reverse_forward),
    (10, "Bernstein discrimination", bernstein),
    (11, "generalized EPI", zamir_feder),
    (12, "Renyi and Young", renyi_young),
    (13, "determinism", determinism),
];

pub fn run_criterion(id: u8) -> Option<CriterionResult> {
    CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|&(id, name, f)| outcome(id, name, f()))
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&(id, name, f)| outcome(id, name, f()))
        .collect()
}
