use serde_json::json;

use super::{ChainReport, CheckContext, InequalityReport, Inputs};
use crate::dist::Distribution1D;
use crate::error::Result;
use crate::transport::{
    derivative_fd_max_rel_err, pushforward_ks, verify_change_of_variable, Transport1D,
};

const CHANGE_OF_VARIABLE_TOL: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-5;
const FD_PROBES: usize = 2000;
const FD_HALF_WIDTH_SIGMAS: f64 = 8.0;

fn target_inputs(target: &Distribution1D) -> Inputs {
    let mut inputs = Inputs::new();
    inputs.insert(
        "source".into(),
        json!(Distribution1D::standard_gaussian().to_string()),
    );
    inputs.insert("target".into(), json!(target.to_string()));
    inputs
}

/// `h(T(X*)) = h(X*) + E ln T′(X*)` for the map from a standard Gaussian.
pub fn change_of_variable(target: &Distribution1D, ctx: &CheckContext) -> Result<InequalityReport> {
    let t = Transport1D::new(Distribution1D::standard_gaussian(), target.clone())?;
    let r = verify_change_of_variable(&t)?;
    Ok(InequalityReport::identity(
        "change_of_variable",
        r.h_target.nats,
        r.h_source.nats + r.expected_ln_derivative,
        r.err,
        ctx.scaled(CHANGE_OF_VARIABLE_TOL),
        target_inputs(target),
    ))
}

/// Kolmogorov–Smirnov test of pushed-forward samples and a finite-difference
/// check of `T′`.
pub fn transport_pushforward(target: &Distribution1D, ctx: &CheckContext) -> Result<ChainReport> {
    let t = Transport1D::new(Distribution1D::standard_gaussian(), target.clone())?;
    let ks = pushforward_ks(&t, ctx.ks_samples, ctx.seed, ctx.ks_alpha)?;
    let fd = derivative_fd_max_rel_err(&t, FD_PROBES, FD_HALF_WIDTH_SIGMAS);
    let mut inputs = target_inputs(target);
    inputs.insert("samples".into(), json!(ks.samples));
    inputs.insert("alpha".into(), json!(ks.alpha));
    inputs.insert("seed".into(), json!(ctx.seed));
    let steps = vec![
        InequalityReport::inequality(
            "ks_statistic",
            ks.statistic,
            ks.critical_value,
            ks.critical_value - ks.statistic,
            0.0,
            0.0,
            inputs.clone(),
        ),
        InequalityReport::inequality(
            "derivative_finite_difference",
            fd,
            FD_REL_TOL,
            FD_REL_TOL - fd,
            0.0,
            0.0,
            inputs.clone(),
        ),
    ];
    Ok(ChainReport::new(
        "transport_pushforward",
        steps,
        None,
        inputs,
    ))
}
