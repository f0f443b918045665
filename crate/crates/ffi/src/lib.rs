//! C interface to `epi-lab`.
//!
//! Objects are opaque handles released by their `_free` function. Every
//! fallible call returns an [`EpiStatus`]; on failure the message is kept in a
//! per-thread slot readable through [`epi_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::str::FromStr;

use epi_lab::cli::{self, ExperimentConfig, OutputFormat, RunOptions, RunOutcome};
use epi_lab::entropy::{diff_entropy, entropy_power};
use epi_lab::ineq::{self, CheckContext, CheckKind, CheckOutcome, Verdict};
use epi_lab::{DistSpec, Distribution1D, EpiError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Config = 4,
    Utf8 = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpiVerdict {
    Holds = 0,
    Equality = 1,
    ViolatedWithinErr = 2,
    Violated = 3,
}

impl From<Verdict> for EpiVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Holds => Self::Holds,
            Verdict::Equality => Self::Equality,
            Verdict::ViolatedWithinErr => Self::ViolatedWithinErr,
            Verdict::Violated => Self::Violated,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpiFormat {
    Json = 0,
    Csv = 1,
}

/// One inequality row. For multi-step checks this is the first row whose
/// verdict equals the overall verdict.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpiReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub err: f64,
    pub tol: f64,
    pub verdict: EpiVerdict,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EpiSummary {
    pub cells: usize,
    pub holds: usize,
    pub equality: usize,
    pub violated_within_err: usize,
    pub violated: usize,
    pub errors: usize,
}

/// A univariate distribution.
pub struct EpiDistribution(Distribution1D);

/// The result of running an experiment config.
pub struct EpiRun(RunOutcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(EpiStatus, String);

impl From<EpiError> for Failure {
    fn from(e: EpiError) -> Self {
        let status = match e {
            EpiError::Domain(_)
            | EpiError::InvalidParameter(_)
            | EpiError::Dimension(_)
            | EpiError::Exponent(_)
            | EpiError::NotSpd(_) => EpiStatus::InvalidArgument,
            _ => EpiStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

impl From<cli::ConfigError> for Failure {
    fn from(e: cli::ConfigError) -> Self {
        Failure(EpiStatus::Config, e.to_string())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EpiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EpiStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            EpiStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(EpiStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(EpiStatus::Utf8, format!("{what}: {e}")))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(p, n))
    }
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Failure(EpiStatus::Numerical, e.to_string()))
}

fn context(tol_scale: f64) -> Result<CheckContext, Failure> {
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        return Err(Failure(
            EpiStatus::InvalidArgument,
            format!("tol_scale must be positive, got {tol_scale}"),
        ));
    }
    Ok(CheckContext {
        tol_scale,
        ..CheckContext::default()
    })
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn epi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn epi_clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn epi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn store(
    d: Result<Distribution1D, EpiError>,
    dst: *mut *mut EpiDistribution,
) -> Result<(), Failure> {
    let dst = out(dst, "out")?;
    *dst = Box::into_raw(Box::new(EpiDistribution(d?)));
    Ok(())
}

#[no_mangle]
pub unsafe extern "C" fn epi_distribution_gaussian(
    variance: f64,
    dst: *mut *mut EpiDistribution,
) -> EpiStatus {
    guard(|| store(Distribution1D::gaussian(variance), dst))
}

#[no_mangle]
pub unsafe extern "C" fn epi_distribution_laplace(
    scale: f64,
    dst: *mut *mut EpiDistribution,
) -> EpiStatus {
    guard(|| store(Distribution1D::laplace(scale), dst))
}

#[no_mangle]
pub unsafe extern "C" fn epi_distribution_logistic(
    scale: f64,
    dst: *mut *mut EpiDistribution,
) -> EpiStatus {
    guard(|| store(Distribution1D::logistic(scale), dst))
}

/// Gaussian mixture with `n` components.
#[no_mangle]
pub unsafe extern "C" fn epi_distribution_mixture(
    weights: *const f64,
    means: *const f64,
    sds: *const f64,
    n: usize,
    dst: *mut *mut EpiDistribution,
) -> EpiStatus {
    guard(|| {
        let w = slice(weights, n, "weights")?;
        let m = slice(means, n, "means")?;
        let s = slice(sds, n, "sds")?;
        store(Distribution1D::mixture(w, m, s), dst)
    })
}

/// Parses a JSON spec such as `{"family": "laplace", "scale": 1}`.
#[no_mangle]
pub unsafe extern "C" fn epi_distribution_from_json(
    json: *const c_char,
    dst: *mut *mut EpiDistribution,
) -> EpiStatus {
    guard(|| {
        let spec: DistSpec = serde_json::from_str(text(json, "json")?)
            .map_err(|e| Failure(EpiStatus::InvalidArgument, e.to_string()))?;
        store(Distribution1D::from_spec(&spec), dst)
    })
}

#[no_mangle]
pub unsafe extern "C" fn epi_distribution_free(d: *mut EpiDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

#[no_mangle]
pub unsafe extern "C" fn epi_distribution_pdf(
    d: *const EpiDistribution,
    x: f64,
    value: *mut f64,
) -> EpiStatus {
    guard(|| {
        *out(value, "value")? = borrow(d, "distribution")?.0.pdf(x);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn epi_distribution_quantile(
    d: *const EpiDistribution,
    u: f64,
    value: *mut f64,
) -> EpiStatus {
    guard(|| {
        *out(value, "value")? = borrow(d, "distribution")?.0.quantile(u)?;
        Ok(())
    })
}

/// Differential entropy in nats with its error estimate.
#[no_mangle]
pub unsafe extern "C" fn epi_entropy(
    d: *const EpiDistribution,
    nats: *mut f64,
    err: *mut f64,
) -> EpiStatus {
    guard(|| {
        let h = diff_entropy(&borrow(d, "distribution")?.0)?;
        *out(nats, "nats")? = h.nats;
        if let Some(e) = err.as_mut() {
            *e = h.err;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn epi_entropy_power(
    d: *const EpiDistribution,
    value: *mut f64,
) -> EpiStatus {
    guard(|| {
        *out(value, "value")? = entropy_power(&borrow(d, "distribution")?.0)?;
        Ok(())
    })
}

fn pair_check(
    name: &str,
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    ctx: &CheckContext,
) -> Result<CheckOutcome, Failure> {
    let kind = CheckKind::from_str(name)?;
    Ok(match kind {
        CheckKind::EpiShannon => ineq::epi_shannon(x, y, ctx)?.into(),
        CheckKind::EpiLieb => ineq::epi_lieb(x, y, lambda, ctx)?.into(),
        CheckKind::EpiPowerConcavity => ineq::epi_power_concavity(x, y, lambda, ctx)?.into(),
        CheckKind::ReverseEpi => ineq::reverse_epi(x, y, lambda, ctx)?.into(),
        CheckKind::DeficitSandwich => ineq::deficit_sandwich(x, y, lambda, ctx)?.into(),
        CheckKind::ProofChain => ineq::proof_chain(x, y, lambda, ctx)?.into(),
        CheckKind::EqualityDiagnostics => ineq::equality_diagnostics(x, y, lambda, ctx)?.into(),
        CheckKind::ReverseEquivalence => ineq::reverse_equivalence(x, y, lambda, ctx)?.into(),
        other => {
            return Err(Failure(
                EpiStatus::InvalidArgument,
                format!("{} does not take a pair of distributions", other.name()),
            ))
        }
    })
}

unsafe fn run_pair(
    check: *const c_char,
    x: *const EpiDistribution,
    y: *const EpiDistribution,
    lambda: f64,
    tol_scale: f64,
) -> Result<CheckOutcome, Failure> {
    let name = text(check, "check")?;
    let x = &borrow(x, "x")?.0;
    let y = &borrow(y, "y")?.0;
    pair_check(name, x, y, lambda, &context(tol_scale)?)
}

/// Runs a two-distribution check by name. `lambda` is ignored by
/// `epi_shannon`.
#[no_mangle]
pub unsafe extern "C" fn epi_check_pair(
    check: *const c_char,
    x: *const EpiDistribution,
    y: *const EpiDistribution,
    lambda: f64,
    tol_scale: f64,
    report: *mut EpiReport,
) -> EpiStatus {
    guard(|| {
        let report = out(report, "report")?;
        let outcome = run_pair(check, x, y, lambda, tol_scale)?;
        let verdict = outcome.verdict();
        let rows = outcome.rows();
        let (_, r) = rows
            .iter()
            .find(|(_, r)| r.verdict == verdict)
            .or(rows.first())
            .ok_or_else(|| Failure(EpiStatus::Numerical, "check produced no rows".into()))?;
        *report = EpiReport {
            lhs: r.lhs,
            rhs: r.rhs,
            gap: r.gap,
            err: r.err,
            tol: r.tol,
            verdict: verdict.into(),
        };
        Ok(())
    })
}

/// Full report of a two-distribution check as JSON; release with
/// [`epi_string_free`].
#[no_mangle]
pub unsafe extern "C" fn epi_check_pair_json(
    check: *const c_char,
    x: *const EpiDistribution,
    y: *const EpiDistribution,
    lambda: f64,
    tol_scale: f64,
    json: *mut *mut c_char,
) -> EpiStatus {
    guard(|| {
        let json = out(json, "json")?;
        let outcome = run_pair(check, x, y, lambda, tol_scale)?;
        let s = serde_json::to_string(&outcome)
            .map_err(|e| Failure(EpiStatus::Numerical, e.to_string()))?;
        *json = owned_string(s)?;
        Ok(())
    })
}

/// Runs an experiment config given as TOML text. `workers == 0` uses the
/// default pool.
#[no_mangle]
pub unsafe extern "C" fn epi_run_config(
    toml: *const c_char,
    tol_scale: f64,
    workers: usize,
    dst: *mut *mut EpiRun,
) -> EpiStatus {
    guard(|| {
        let dst = out(dst, "out")?;
        let config = ExperimentConfig::from_toml(text(toml, "toml")?)?;
        let opts = RunOptions {
            workers: (workers > 0).then_some(workers),
            tol_scale,
            ..RunOptions::default()
        };
        *dst = Box::into_raw(Box::new(EpiRun(cli::execute(&config, opts)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn epi_run_summary(
    run: *const EpiRun,
    summary: *mut EpiSummary,
) -> EpiStatus {
    guard(|| {
        let s = borrow(run, "run")?.0.summary;
        *out(summary, "summary")? = EpiSummary {
            cells: s.cells,
            holds: s.holds,
            equality: s.equality,
            violated_within_err: s.violated_within_err,
            violated: s.violated,
            errors: s.errors,
        };
        Ok(())
    })
}

/// The exit status the command-line tool would report, or -1 for a null run.
#[no_mangle]
pub unsafe extern "C" fn epi_run_exit_code(run: *const EpiRun) -> i32 {
    run.as_ref().map_or(-1, |r| r.0.exit_code())
}

/// Renders the run as JSON or CSV; release with [`epi_string_free`].
#[no_mangle]
pub unsafe extern "C" fn epi_run_render(
    run: *const EpiRun,
    format: EpiFormat,
    rendered: *mut *mut c_char,
) -> EpiStatus {
    guard(|| {
        let run = &borrow(run, "run")?.0;
        let rendered = out(rendered, "rendered")?;
        let format = match format {
            EpiFormat::Json => OutputFormat::Json,
            EpiFormat::Csv => OutputFormat::Csv,
        };
        let mut buf = Vec::new();
        run.write(&mut buf, format)
            .map_err(|e| Failure(EpiStatus::Numerical, e.to_string()))?;
        let s = String::from_utf8(buf).map_err(|e| Failure(EpiStatus::Utf8, e.to_string()))?;
        *rendered = owned_string(s)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn epi_run_free(run: *mut EpiRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

#[no_mangle]
pub unsafe extern "C" fn epi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
