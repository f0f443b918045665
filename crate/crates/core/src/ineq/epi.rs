use serde_json::json;

use super::{ChainReport, CheckContext, InequalityReport, Inputs};
use crate::dist::Distribution1D;
use crate::entropy::{
    diff_entropy, entropy_of_combo_with, entropy_power_of, rotated_pair_with,
    rotation_coefficients, EntropyValue,
};
use crate::error::{check_lambda, EpiError, Result};
use crate::transport::Transport1D;

const EQUALITY_PROBES: usize = 1001;
const EQUALITY_PROBE_HALF_WIDTH: f64 = 5.0;
const EQUALITY_TOL: f64 = 1e-6;

pub(crate) fn pair_inputs(x: &Distribution1D, y: &Distribution1D, lambda: Option<f64>) -> Inputs {
    let mut inputs = Inputs::new();
    inputs.insert("x".into(), json!(x.to_string()));
    inputs.insert("y".into(), json!(y.to_string()));
    if let Some(l) = lambda {
        inputs.insert("lambda".into(), json!(l));
    }
    inputs
}

fn mix(lambda: f64, a: EntropyValue, b: EntropyValue) -> EntropyValue {
    EntropyValue::combine(&[(lambda, a), (1.0 - lambda, b)])
}

/// `N(X+Y) ≥ N(X) + N(Y)`.
pub fn epi_shannon(
    x: &Distribution1D,
    y: &Distribution1D,
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    let hx = diff_entropy(x)?;
    let hy = diff_entropy(y)?;
    let hs = entropy_of_combo_with(&[1.0, 1.0], &[x.clone(), y.clone()], ctx.grid)?;
    let (ns, nx, ny) = (
        entropy_power_of(hs.nats),
        entropy_power_of(hx.nats),
        entropy_power_of(hy.nats),
    );
    let err = 2.0 * (ns * hs.err + nx * hx.err + ny * hy.err);
    let method = hs.method.max(hx.method).max(hy.method);
    let rhs = nx + ny;
    Ok(InequalityReport::inequality(
        "epi_shannon",
        ns,
        rhs,
        ns - rhs,
        err,
        ctx.tol_for(method),
        pair_inputs(x, y, None),
    ))
}

fn lieb_parts(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    ctx: &CheckContext,
) -> Result<(EntropyValue, EntropyValue, EntropyValue)> {
    check_lambda(lambda)?;
    let (cu, _) = rotation_coefficients(lambda);
    let hu = entropy_of_combo_with(&cu, &[x.clone(), y.clone()], ctx.grid)?;
    Ok((hu, diff_entropy(x)?, diff_entropy(y)?))
}

/// `h(√λX + √(1−λ)Y) ≥ λh(X) + (1−λ)h(Y)`.
pub fn epi_lieb(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    let (hu, hx, hy) = lieb_parts(x, y, lambda, ctx)?;
    let rhs = mix(lambda, hx, hy);
    let gap = EntropyValue::combine(&[(1.0, hu), (-1.0, rhs)]);
    Ok(InequalityReport::inequality(
        "epi_lieb",
        hu.nats,
        rhs.nats,
        gap.nats,
        gap.err,
        ctx.tol_for(gap.method),
        pair_inputs(x, y, Some(lambda)),
    ))
}

/// `N(√λX + √(1−λ)Y) ≥ λN(X) + (1−λ)N(Y)`.
pub fn epi_power_concavity(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    let (hu, hx, hy) = lieb_parts(x, y, lambda, ctx)?;
    let (nu, nx, ny) = (
        entropy_power_of(hu.nats),
        entropy_power_of(hx.nats),
        entropy_power_of(hy.nats),
    );
    let rhs = lambda * nx + (1.0 - lambda) * ny;
    let err = 2.0 * (nu * hu.err + lambda * nx * hx.err + (1.0 - lambda) * ny * hy.err);
    let method = hu.method.max(hx.method).max(hy.method);
    Ok(InequalityReport::inequality(
        "epi_power_concavity",
        nu,
        rhs,
        nu - rhs,
        err,
        ctx.tol_for(method),
        pair_inputs(x, y, Some(lambda)),
    ))
}

fn reverse_report(
    name: &str,
    r: &crate::entropy::RotatedPairReport,
    ctx: &CheckContext,
    inputs: Inputs,
) -> InequalityReport {
    let rhs = mix(r.lambda, r.h_x, r.h_y);
    let gap = EntropyValue::combine(&[(1.0, rhs), (-1.0, r.h_u_given_v)]);
    InequalityReport::inequality(
        name,
        r.h_u_given_v.nats,
        rhs.nats,
        gap.nats,
        gap.err,
        ctx.tol_for(gap.method),
        inputs,
    )
}

/// `h(U | V) ≤ λh(X) + (1−λ)h(Y)` for the rotated pair.
pub fn reverse_epi(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    let r = rotated_pair_with(x, y, lambda, ctx.grid)?;
    Ok(reverse_report(
        "reverse_epi",
        &r,
        ctx,
        pair_inputs(x, y, Some(lambda)),
    ))
}

/// `0 ≤ h(U) − λh(X) − (1−λ)h(Y) ≤ I(U;V)`.
pub fn deficit_sandwich(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    ctx: &CheckContext,
) -> Result<ChainReport> {
    let r = rotated_pair_with(x, y, lambda, ctx.grid)?;
    let inputs = pair_inputs(x, y, Some(lambda));
    let deficit = EntropyValue::combine(&[(1.0, r.h_u), (-1.0, mix(lambda, r.h_x, r.h_y))]);
    let upper = EntropyValue::combine(&[(1.0, r.mutual_info), (-1.0, deficit)]);
    let lower = InequalityReport::inequality(
        "deficit_nonnegative",
        deficit.nats,
        0.0,
        deficit.nats,
        deficit.err,
        ctx.tol_for(deficit.method),
        inputs.clone(),
    );
    let upper = InequalityReport::inequality(
        "deficit_below_mutual_information",
        deficit.nats,
        r.mutual_info.nats,
        upper.nats,
        upper.err,
        ctx.tol_for(upper.method),
        inputs.clone(),
    );
    Ok(ChainReport::new(
        "deficit_sandwich",
        vec![lower, upper],
        None,
        inputs,
    ))
}

/// The reverse-EPI gap equals the gap of `(1−λ)h(X) + λh(Y) ≤ h(V)`.
pub fn reverse_equivalence(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    ctx: &CheckContext,
) -> Result<ChainReport> {
    let r = rotated_pair_with(x, y, lambda, ctx.grid)?;
    let inputs = pair_inputs(x, y, Some(lambda));
    let reverse = reverse_report("reverse_epi", &r, ctx, inputs.clone());
    let permuted_rhs = mix(1.0 - lambda, r.h_x, r.h_y);
    let permuted_gap = EntropyValue::combine(&[(1.0, r.h_v), (-1.0, permuted_rhs)]);
    let permuted = InequalityReport::inequality(
        "permuted_forward",
        r.h_v.nats,
        permuted_rhs.nats,
        permuted_gap.nats,
        permuted_gap.err,
        ctx.tol_for(permuted_gap.method),
        inputs.clone(),
    );
    let agreement = InequalityReport::identity(
        "agreement",
        reverse.gap,
        permuted.gap,
        reverse.err + permuted.err,
        ctx.tol_for(permuted_gap.method),
        inputs.clone(),
    );
    Ok(ChainReport::new(
        "reverse_equivalence",
        vec![reverse, permuted],
        Some(agreement),
        inputs,
    ))
}

fn derivative_profile(t: &Transport1D) -> (f64, f64) {
    let step = 2.0 * EQUALITY_PROBE_HALF_WIDTH / (EQUALITY_PROBES - 1) as f64;
    let values: Vec<f64> = (0..EQUALITY_PROBES)
        .map(|k| t.derivative(-EQUALITY_PROBE_HALF_WIDTH + k as f64 * step))
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let dev = values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    (mean, dev)
}

/// Equality forces constant, equal transport derivatives and a vanishing
/// EPI gap; reports how far each condition is from holding.
pub fn equality_diagnostics(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    ctx: &CheckContext,
) -> Result<ChainReport> {
    check_lambda(lambda)?;
    let std = Distribution1D::standard_gaussian();
    let tx = Transport1D::new(std.clone(), x.clone()).map_err(EpiError::in_step("transport_x"))?;
    let ty = Transport1D::new(std, y.clone()).map_err(EpiError::in_step("transport_y"))?;
    let (mean_t, dev_t) = derivative_profile(&tx);
    let (mean_u, dev_u) = derivative_profile(&ty);
    let inputs = pair_inputs(x, y, Some(lambda));
    let tol = ctx.scaled(EQUALITY_TOL);
    let lieb = epi_lieb(x, y, lambda, ctx)?;
    let regime = dev_t < tol && dev_u < tol && lieb.gap.abs() < tol;
    let steps = vec![
        InequalityReport::inequality(
            "t_prime_deviation",
            dev_t,
            0.0,
            dev_t,
            0.0,
            tol,
            inputs.clone(),
        ),
        InequalityReport::inequality(
            "u_prime_deviation",
            dev_u,
            0.0,
            dev_u,
            0.0,
            tol,
            inputs.clone(),
        ),
        InequalityReport::inequality(
            "derivative_mismatch",
            mean_t,
            mean_u,
            (mean_t - mean_u).abs(),
            0.0,
            tol,
            inputs.clone(),
        ),
        lieb,
    ];
    let mut chain = ChainReport::new("equality_diagnostics", steps, None, inputs);
    chain.notes.insert("equality_regime".into(), json!(regime));
    Ok(chain)
}
