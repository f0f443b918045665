use serde_json::json;

use super::epi::pair_inputs;
use super::{ChainReport, CheckContext, InequalityReport};
use crate::dist::Distribution1D;
use crate::entropy::{diff_entropy, entropy_of_combo_with, rotation_coefficients, EntropyValue};
use crate::error::{check_lambda, EpiError, Result};
use crate::transport::{jensen_expectation, verify_change_of_variable, Transport1D};

const TRANSPORT_TOL: f64 = 1e-5;
const GAUSSIAN_LINE_TOL: f64 = 1e-6;
const TELESCOPING_TOL: f64 = 1e-4;

/// The transport proof of `h(U) ≥ λh(X) + (1−λ)h(Y)` as a sequence of steps
/// whose gaps add up to the EPI gap.
///
/// With `X = T(X*)`, `Y = U(Y*)` for standard Gaussians `X*`, `Y*` and
/// `X̃ = √λX* + √(1−λ)Y*`:
/// - `transport_x`, `transport_y`: weighted residuals of `h(X) = h(X*) + E ln T′(X*)`;
/// - `jensen`: `E ln(λT′ + (1−λ)U′) − λE ln T′ − (1−λ)E ln U′`;
/// - `conditioning`: `h(U) − h(X̃) − E ln(λT′ + (1−λ)U′)`;
/// - `gaussian_line`: `h(X̃) − λh(X*) − (1−λ)h(Y*)`.
///
/// The closure compares the sum with a direct evaluation of the EPI gap.
pub fn proof_chain(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    ctx: &CheckContext,
) -> Result<ChainReport> {
    check_lambda(lambda)?;
    let inputs = pair_inputs(x, y, Some(lambda));
    let std = Distribution1D::standard_gaussian();
    let w = [lambda, 1.0 - lambda];

    let h_star = diff_entropy(&std)?;
    let tx = Transport1D::new(std.clone(), x.clone()).map_err(EpiError::in_step("transport_x"))?;
    let ty = Transport1D::new(std.clone(), y.clone()).map_err(EpiError::in_step("transport_y"))?;
    let cx = verify_change_of_variable(&tx).map_err(EpiError::in_step("transport_x"))?;
    let cy = verify_change_of_variable(&ty).map_err(EpiError::in_step("transport_y"))?;

    let transport_step = |name: &str, weight: f64, c: &crate::transport::ChangeOfVariableReport| {
        InequalityReport::identity(
            name,
            weight * (c.h_source.nats + c.expected_ln_derivative),
            weight * c.h_target.nats,
            weight * c.err,
            ctx.scaled(TRANSPORT_TOL),
            inputs.clone(),
        )
    };
    let step_x = transport_step("transport_x", w[0], &cx);
    let step_y = transport_step("transport_y", w[1], &cy);

    let jensen = jensen_expectation(&tx, &ty, lambda).map_err(EpiError::in_step("jensen"))?;
    let quad_mix = w[0] * cx.expected_ln_derivative + w[1] * cy.expected_ln_derivative;
    let jensen_err = (jensen.mix_of_e - quad_mix).abs();
    let mut jensen_step = InequalityReport::inequality(
        "jensen",
        jensen.e_mix,
        jensen.mix_of_e,
        jensen.gap,
        jensen_err,
        ctx.tol_for(crate::entropy::EntropyMethod::Quadrature),
        inputs.clone(),
    );
    jensen_step
        .inputs
        .insert("nodes".into(), json!(jensen.nodes));

    let (cu, _) = rotation_coefficients(lambda);
    let pair = [x.clone(), y.clone()];
    let h_u =
        entropy_of_combo_with(&cu, &pair, ctx.grid).map_err(EpiError::in_step("conditioning"))?;
    let h_mixed_star = entropy_of_combo_with(&cu, &[std.clone(), std], ctx.grid)?;
    let conditioning = InequalityReport::inequality(
        "conditioning",
        h_u.nats,
        h_mixed_star.nats + jensen.e_mix,
        h_u.nats - h_mixed_star.nats - jensen.e_mix,
        h_u.err + h_mixed_star.err + jensen_err,
        ctx.tol_for(h_u.method),
        inputs.clone(),
    );

    let gaussian_line = InequalityReport::identity(
        "gaussian_line",
        h_mixed_star.nats,
        w[0] * h_star.nats + w[1] * h_star.nats,
        h_mixed_star.err,
        ctx.scaled(GAUSSIAN_LINE_TOL),
        inputs.clone(),
    );

    let steps = vec![step_x, step_y, jensen_step, conditioning, gaussian_line];
    let total_gap: f64 = steps.iter().map(|s| s.gap).sum();
    let total_err: f64 = steps.iter().map(|s| s.err).sum();
    let epi_gap = EntropyValue::combine(&[(1.0, h_u), (-w[0], cx.h_target), (-w[1], cy.h_target)]);
    let closure = InequalityReport::identity(
        "telescoping",
        total_gap,
        epi_gap.nats,
        total_err + epi_gap.err,
        ctx.scaled(TELESCOPING_TOL),
        inputs.clone(),
    );
    Ok(ChainReport::new(
        "proof_chain",
        steps,
        Some(closure),
        inputs,
    ))
}
