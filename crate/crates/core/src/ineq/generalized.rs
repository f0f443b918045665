use nalgebra::DMatrix;
use serde_json::json;

use super::epi::pair_inputs;
use super::{CheckContext, InequalityReport, Inputs};
use crate::dist::Distribution1D;
use crate::entropy::{
    component_grids, conjugate, diff_entropy, entropy_of_combo_with, renyi_entropy, renyi_of_combo,
    rotation_coefficients, widened_for_order, EntropyMethod, EntropyValue,
};
use crate::error::{check_lambda, EpiError, Result};
use crate::gaussian;
use crate::numerics::grid::{self, GridDensity};

const NORMALIZATION_TOL: f64 = 1e-10;

/// `h(Σ aᵢXᵢ) ≥ Σ aᵢ² h(Xᵢ)` for unit-norm `a`.
pub fn zamir_feder(
    coeffs: &[f64],
    dists: &[Distribution1D],
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    let norm2: f64 = coeffs.iter().map(|a| a * a).sum();
    if (norm2 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(EpiError::InvalidParameter(format!(
            "coefficients must satisfy Σaᵢ² = 1, got {norm2}"
        )));
    }
    let lhs = entropy_of_combo_with(coeffs, dists, ctx.grid)?;
    let terms = coeffs
        .iter()
        .zip(dists)
        .map(|(a, d)| Ok((a * a, diff_entropy(d)?)))
        .collect::<Result<Vec<_>>>()?;
    let rhs = EntropyValue::combine(&terms);
    let gap = EntropyValue::combine(&[(1.0, lhs), (-1.0, rhs)]);
    let mut inputs = Inputs::new();
    inputs.insert("coeffs".into(), json!(coeffs));
    inputs.insert(
        "dists".into(),
        json!(dists.iter().map(|d| d.to_string()).collect::<Vec<_>>()),
    );
    Ok(InequalityReport::inequality(
        "zamir_feder",
        lhs.nats,
        rhs.nats,
        gap.nats,
        gap.err,
        ctx.tol_for(gap.method),
        inputs,
    ))
}

/// `h(AX) ≥ Σᵢⱼ aᵢⱼ² h(Xⱼ)` for `A` with orthonormal rows and Gaussian `Xⱼ`.
pub fn zamir_feder_matrix(
    a: &DMatrix<f64>,
    variances: &[f64],
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    let (lhs, rhs) = gaussian::zamir_feder_gaussian_gap(a, variances)?;
    let rows: Vec<Vec<f64>> = a.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut inputs = Inputs::new();
    inputs.insert("matrix".into(), json!(rows));
    inputs.insert("variances".into(), json!(variances));
    Ok(InequalityReport::inequality(
        "zamir_feder",
        lhs,
        rhs,
        lhs - rhs,
        0.0,
        ctx.tol_for(EntropyMethod::ClosedForm),
        inputs,
    ))
}

/// Exponents `(p, q)` with `1/p′ = λ/r′` and `1/q′ = (1−λ)/r′`.
pub fn renyi_exponents(lambda: f64, r: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    if !(r.is_finite() && r > 0.0 && r != 1.0) {
        return Err(EpiError::Exponent(format!(
            "r must be positive and different from 1, got {r}"
        )));
    }
    let rc = conjugate(r);
    let p = conjugate(rc / lambda);
    let q = conjugate(rc / (1.0 - lambda));
    let ok = if r > 1.0 {
        p > 1.0 && q > 1.0
    } else {
        p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0
    };
    if !ok || !p.is_finite() || !q.is_finite() {
        return Err(EpiError::Exponent(format!(
            "1/p' = λ/r' and 1/q' = (1-λ)/r' give p = {p}, q = {q}, outside the regime of r = {r}"
        )));
    }
    Ok((p, q))
}

/// `h_r(√λX + √(1−λ)Y) − λh_p(X) − (1−λ)h_q(Y)` is at least its value for
/// i.i.d. Gaussians.
pub fn renyi_epi(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    r: f64,
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    let (p, q) = renyi_exponents(lambda, r)?;
    let (cu, _) = rotation_coefficients(lambda);
    let h_u = renyi_of_combo(&cu, &[x.clone(), y.clone()], r, ctx.grid)?;
    let value = EntropyValue::combine(&[
        (1.0, h_u),
        (-lambda, renyi_entropy(x, p)?),
        (-(1.0 - lambda), renyi_entropy(y, q)?),
    ]);
    let std = Distribution1D::standard_gaussian();
    let reference = renyi_entropy(&std, r)?.nats
        - lambda * renyi_entropy(&std, p)?.nats
        - (1.0 - lambda) * renyi_entropy(&std, q)?.nats;
    let mut inputs = pair_inputs(x, y, Some(lambda));
    inputs.insert("p".into(), json!(p));
    inputs.insert("q".into(), json!(q));
    inputs.insert("r".into(), json!(r));
    Ok(InequalityReport::inequality(
        "renyi_epi",
        value.nats,
        reference,
        value.nats - reference,
        value.err,
        ctx.tol_for(value.method),
        inputs,
    ))
}

/// Sharp one-dimensional Young constant `√(m^{1/m} / |m′|^{1/m′})`.
pub fn young_constant(m: f64) -> f64 {
    let mc = conjugate(m);
    (m.powf(1.0 / m) / mc.abs().powf(1.0 / mc)).sqrt()
}

fn norm_with_rel_err(g: &GridDensity, m: f64) -> (f64, f64) {
    let (integral, err) = g.integral_pow_with_error(m);
    let rel = (err + g.tail_mass()) / (m * integral);
    (integral.powf(1.0 / m), rel)
}

/// Sharp Young inequality `A_r‖f∗g‖_r ≤ A_p‖f‖_p A_q‖g‖_q` for `p, q, r > 1`,
/// reversed for `p, q, r ∈ (0, 1)`, with `1/p + 1/q = 1 + 1/r`.
pub fn young_check(
    x: &Distribution1D,
    y: &Distribution1D,
    p: f64,
    q: f64,
    r: f64,
    ctx: &CheckContext,
) -> Result<InequalityReport> {
    let exps = [p, q, r];
    if exps
        .iter()
        .any(|e| !(e.is_finite() && *e > 0.0 && *e != 1.0))
    {
        return Err(EpiError::Exponent(format!(
            "exponents must be positive and different from 1: {exps:?}"
        )));
    }
    let forward = exps.iter().all(|e| *e > 1.0);
    let reverse = exps.iter().all(|e| *e < 1.0);
    if !forward && !reverse {
        return Err(EpiError::Exponent(format!(
            "exponents {exps:?} mix the forward and reverse regimes"
        )));
    }
    if (1.0 / p + 1.0 / q - 1.0 - 1.0 / r).abs() > NORMALIZATION_TOL {
        return Err(EpiError::Exponent(format!(
            "1/p + 1/q = 1 + 1/r fails for {exps:?}"
        )));
    }
    let smallest = exps.iter().copied().fold(1.0, f64::min);
    let spec = widened_for_order(ctx.grid, smallest);
    let grids = component_grids(&[1.0, 1.0], &[x.clone(), y.clone()], spec)?;
    let conv = grid::convolve(&grids[0], &grids[1])?;
    let (nf, ef) = norm_with_rel_err(&grids[0], p);
    let (ng, eg) = norm_with_rel_err(&grids[1], q);
    let (nc, ec) = norm_with_rel_err(&conv, r);
    let lhs = young_constant(r) * nc;
    let rhs = young_constant(p) * nf * young_constant(q) * ng;
    let gap = if forward { rhs - lhs } else { lhs - rhs };
    let err = lhs * ec + rhs * (ef + eg);
    let mut inputs = pair_inputs(x, y, None);
    inputs.insert("p".into(), json!(p));
    inputs.insert("q".into(), json!(q));
    inputs.insert("r".into(), json!(r));
    inputs.insert(
        "regime".into(),
        json!(if forward { "forward" } else { "reverse" }),
    );
    Ok(InequalityReport::inequality(
        "young_check",
        lhs,
        rhs,
        gap,
        err,
        ctx.tol_for(EntropyMethod::Grid),
        inputs,
    ))
}
