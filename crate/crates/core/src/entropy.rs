//! Differential and Rényi entropies, entropy powers, entropies of linear
//! combinations of independent variables, and the rotated pair
//! `U = √λ X + √(1-λ) Y`, `V = -√(1-λ) X + √λ Y`.
//!
//! All entropies are in nats.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::dist::Distribution1D;
use crate::error::{check_lambda, EpiError, Result};
use crate::numerics::grid::{self, grid_density_with_spacing, GridDensity};
use crate::numerics::quadrature::integrate_with_breaks;

const ENTROPY_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMethod {
    ClosedForm,
    Quadrature,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyValue {
    pub nats: f64,
    pub method: EntropyMethod,
    pub err: f64,
}

impl EntropyValue {
    pub fn closed_form(nats: f64) -> Self {
        Self {
            nats,
            method: EntropyMethod::ClosedForm,
            err: 0.0,
        }
    }

    /// Linear combination `Σ cᵢ hᵢ`; errors add in absolute value and the
    /// least exact method wins.
    pub fn combine(terms: &[(f64, EntropyValue)]) -> Self {
        let nats = terms.iter().map(|(c, h)| c * h.nats).sum();
        let err = terms.iter().map(|(c, h)| c.abs() * h.err).sum();
        let method = terms
            .iter()
            .map(|(_, h)| h.method)
            .max()
            .unwrap_or(EntropyMethod::ClosedForm);
        Self { nats, method, err }
    }
}

/// Grid geometry for densities of sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub half_width_sigmas: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width_sigmas: grid::DEFAULT_HALF_WIDTH_SIGMAS,
            points: grid::DEFAULT_POINTS,
        }
    }
}

fn integration_points(d: &Distribution1D, half_width: f64) -> Vec<f64> {
    let mut pts = d.breakpoints();
    pts.push(-half_width);
    pts.push(half_width);
    pts.retain(|p| p.abs() <= half_width);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

pub fn diff_entropy(d: &Distribution1D) -> Result<EntropyValue> {
    if let Some(h) = d.closed_form_entropy() {
        return Ok(EntropyValue::closed_form(h));
    }
    let w = d.effective_half_width(14.0);
    let r = integrate_with_breaks(
        |x| {
            let lp = d.ln_pdf(x);
            -lp.exp() * lp
        },
        &integration_points(d, w),
        ENTROPY_QUAD_TOL,
    )?;
    Ok(EntropyValue {
        nats: r.value,
        method: EntropyMethod::Quadrature,
        err: r.err_estimate,
    })
}

/// `N = exp(2h) / (2πe)`.
pub fn entropy_power_of(h: f64) -> f64 {
    (2.0 * h).exp() / (2.0 * PI * E)
}

pub fn entropy_power(d: &Distribution1D) -> Result<f64> {
    Ok(entropy_power_of(diff_entropy(d)?.nats))
}

/// Either a parametric distribution or a sampled density.
#[derive(Debug, Clone, Copy)]
pub enum DensityRef<'a> {
    Dist(&'a Distribution1D),
    Grid(&'a GridDensity),
}

impl<'a> From<&'a Distribution1D> for DensityRef<'a> {
    fn from(d: &'a Distribution1D) -> Self {
        Self::Dist(d)
    }
}

impl<'a> From<&'a GridDensity> for DensityRef<'a> {
    fn from(g: &'a GridDensity) -> Self {
        Self::Grid(g)
    }
}

fn check_renyi_order(p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p != 1.0 {
        Ok(())
    } else {
        Err(EpiError::InvalidParameter(format!(
            "Rényi order must be positive and different from 1, got {p}"
        )))
    }
}

/// Hölder conjugate `p' = p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

/// `∫ f^p` for a distribution, in closed form where available.
pub fn integral_of_power(d: &Distribution1D, p: f64) -> Result<(f64, EntropyMethod, f64)> {
    match d {
        Distribution1D::Gaussian(g) => {
            let var = g.variance();
            Ok((
                (2.0 * PI * var).powf(0.5 * (1.0 - p)) / p.sqrt(),
                EntropyMethod::ClosedForm,
                0.0,
            ))
        }
        Distribution1D::Laplace(l) => {
            let b = l.scale();
            Ok(((2.0 * b).powf(1.0 - p) / p, EntropyMethod::ClosedForm, 0.0))
        }
        _ => {
            let w = d.effective_half_width(14.0 / p.min(1.0));
            let r = integrate_with_breaks(
                |x| (p * d.ln_pdf(x)).exp(),
                &integration_points(d, w),
                1e-12,
            )?;
            Ok((r.value, EntropyMethod::Quadrature, r.err_estimate))
        }
    }
}

/// Rényi entropy `h_p = ln(∫ f^p) / (1 - p)`.
pub fn renyi_entropy<'a>(src: impl Into<DensityRef<'a>>, p: f64) -> Result<EntropyValue> {
    check_renyi_order(p)?;
    let (integral, method, integral_err) = match src.into() {
        DensityRef::Dist(d) => integral_of_power(d, p)?,
        DensityRef::Grid(g) => (g.integral_pow(p), EntropyMethod::Grid, 0.0),
    };
    if !(integral.is_finite() && integral > 0.0) {
        return Err(EpiError::Domain(format!(
            "∫ f^{p} is not a positive finite number: {integral}"
        )));
    }
    let nats = integral.ln() / (1.0 - p);
    let err = integral_err / (integral * (1.0 - p).abs());
    Ok(EntropyValue { nats, method, err })
}

fn nonzero_terms<'a>(
    coeffs: &[f64],
    dists: &'a [Distribution1D],
) -> Result<Vec<(f64, &'a Distribution1D)>> {
    if coeffs.len() != dists.len() {
        return Err(EpiError::InvalidParameter(format!(
            "{} coefficients for {} distributions",
            coeffs.len(),
            dists.len()
        )));
    }
    if coeffs.iter().any(|a| !a.is_finite()) {
        return Err(EpiError::InvalidParameter(
            "coefficients must be finite".into(),
        ));
    }
    let terms: Vec<(f64, &Distribution1D)> = coeffs
        .iter()
        .copied()
        .zip(dists)
        .filter(|(a, _)| *a != 0.0)
        .collect();
    if terms.is_empty() {
        return Err(EpiError::InvalidParameter(
            "at least one nonzero coefficient required".into(),
        ));
    }
    Ok(terms)
}

/// Densities of `aᵢ Xᵢ` (zero coefficients skipped) on a common lattice.
///
/// Each `Xᵢ` is sampled with spacing `dx / |aᵢ|` so that scaling by `aᵢ`
/// lands every component on spacing `dx` with the origin on a node.
pub fn component_grids(
    coeffs: &[f64],
    dists: &[Distribution1D],
    spec: GridSpec,
) -> Result<Vec<GridDensity>> {
    let terms = nonzero_terms(coeffs, dists)?;
    let n = spec.points;
    let span = terms
        .iter()
        .map(|(a, d)| a.abs() * d.effective_half_width(spec.half_width_sigmas))
        .fold(0.0, f64::max);
    let dx = span / (n / 2) as f64;
    terms
        .into_iter()
        .map(|(a, d)| grid::scale_density(&grid_density_with_spacing(d, dx / a.abs(), n)?, a))
        .collect()
}

/// Density of `Σ aᵢ Xᵢ` on a common lattice.
pub fn combo_density(
    coeffs: &[f64],
    dists: &[Distribution1D],
    spec: GridSpec,
) -> Result<GridDensity> {
    let mut grids = component_grids(coeffs, dists, spec)?.into_iter();
    let first = grids.next().expect("at least one term");
    grids.try_fold(first, |acc, g| grid::convolve(&acc, &g))
}

/// Variance of `Σ aᵢ Xᵢ` when every nonzero term is Gaussian.
fn gaussian_combo_variance(terms: &[(f64, &Distribution1D)]) -> Option<f64> {
    terms
        .iter()
        .map(|(a, d)| match d {
            Distribution1D::Gaussian(g) => Some(a * a * g.variance()),
            _ => None,
        })
        .sum()
}

/// `h(Σ aᵢ Xᵢ)`: exact for a single term or all-Gaussian terms, otherwise
/// from the grid density of the sum.
pub fn entropy_of_combo_with(
    coeffs: &[f64],
    dists: &[Distribution1D],
    spec: GridSpec,
) -> Result<EntropyValue> {
    let terms = nonzero_terms(coeffs, dists)?;
    if let [(a, d)] = terms[..] {
        let h = diff_entropy(d)?;
        return Ok(EntropyValue {
            nats: h.nats + a.abs().ln(),
            ..h
        });
    }
    if let Some(var) = gaussian_combo_variance(&terms) {
        return Ok(EntropyValue::closed_form(0.5 * (2.0 * PI * E * var).ln()));
    }
    let density = combo_density(coeffs, dists, spec)?;
    let (nats, err) = density.entropy_with_error();
    Ok(EntropyValue {
        nats,
        method: EntropyMethod::Grid,
        err,
    })
}

pub fn entropy_of_combo(coeffs: &[f64], dists: &[Distribution1D]) -> Result<EntropyValue> {
    entropy_of_combo_with(coeffs, dists, GridSpec::default())
}

/// Grid geometry wide enough for `∫ f^p` when `p < 1` fattens the tails.
pub fn widened_for_order(spec: GridSpec, p: f64) -> GridSpec {
    GridSpec {
        half_width_sigmas: spec.half_width_sigmas / p.min(1.0),
        ..spec
    }
}

/// `h_p(Σ aᵢ Xᵢ)`.
pub fn renyi_of_combo(
    coeffs: &[f64],
    dists: &[Distribution1D],
    p: f64,
    spec: GridSpec,
) -> Result<EntropyValue> {
    check_renyi_order(p)?;
    let terms = nonzero_terms(coeffs, dists)?;
    if let Some(var) = gaussian_combo_variance(&terms) {
        return renyi_entropy(&Distribution1D::gaussian(var)?, p);
    }
    let density = combo_density(coeffs, dists, widened_for_order(spec, p))?;
    let (integral, err) = density.integral_pow_with_error(p);
    if !(integral.is_finite() && integral > 0.0) {
        return Err(EpiError::Domain(format!(
            "∫ f^{p} is not a positive finite number: {integral}"
        )));
    }
    Ok(EntropyValue {
        nats: integral.ln() / (1.0 - p),
        method: EntropyMethod::Grid,
        err: (err + density.tail_mass()) / (integral * (1.0 - p).abs()),
    })
}

/// Coefficients of `U` and `V` in terms of `(X, Y)`.
pub fn rotation_coefficients(lambda: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    ([s, c], [-c, s])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotatedPairReport {
    pub lambda: f64,
    pub h_x: EntropyValue,
    pub h_y: EntropyValue,
    pub h_u: EntropyValue,
    pub h_v: EntropyValue,
    pub h_uv: EntropyValue,
    pub h_u_given_v: EntropyValue,
    pub mutual_info: EntropyValue,
}

impl RotatedPairReport {
    /// Largest violation among the chain-rule and rotation identities.
    pub fn closure_residual(&self) -> f64 {
        let chain = self.h_uv.nats - self.h_u_given_v.nats - self.h_v.nats;
        let mi = self.mutual_info.nats - (self.h_u.nats + self.h_v.nats - self.h_uv.nats);
        let rotation = self.h_uv.nats - self.h_x.nats - self.h_y.nats;
        chain.abs().max(mi.abs()).max(rotation.abs())
    }
}

/// The joint entropy of `(U, V)` equals `h(X) + h(Y)` because the rotation
/// has unit Jacobian; `h(U|V)` and `I(U;V)` follow from the chain rule.
pub fn rotated_pair(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
) -> Result<RotatedPairReport> {
    rotated_pair_with(x, y, lambda, GridSpec::default())
}

pub fn rotated_pair_with(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    spec: GridSpec,
) -> Result<RotatedPairReport> {
    check_lambda(lambda)?;
    let (cu, cv) = rotation_coefficients(lambda);
    let pair = [x.clone(), y.clone()];
    let h_x = diff_entropy(x)?;
    let h_y = diff_entropy(y)?;
    let h_u = entropy_of_combo_with(&cu, &pair, spec)?;
    let h_v = entropy_of_combo_with(&cv, &pair, spec)?;
    let h_uv = EntropyValue::combine(&[(1.0, h_x), (1.0, h_y)]);
    let h_u_given_v = EntropyValue::combine(&[(1.0, h_uv), (-1.0, h_v)]);
    let mutual_info = EntropyValue::combine(&[(1.0, h_u), (1.0, h_v), (-1.0, h_uv)]);
    Ok(RotatedPairReport {
        lambda,
        h_x,
        h_y,
        h_u,
        h_v,
        h_uv,
        h_u_given_v,
        mutual_info,
    })
}

/// Direct 2-D trapezoid quadrature of `-∫∫ p ln p` for the joint density of
/// `(U, V)` on an `n × n` grid, independent of the rotation identity.
pub fn rotated_joint_entropy_2d(
    x: &Distribution1D,
    y: &Distribution1D,
    lambda: f64,
    n: usize,
) -> Result<f64> {
    check_lambda(lambda)?;
    if n < 64 {
        return Err(EpiError::InvalidParameter(format!(
            "2-D grid needs at least 64 points per axis, got {n}"
        )));
    }
    let lx = x.effective_half_width(12.0);
    let ly = y.effective_half_width(12.0);
    let half = lx.hypot(ly);
    let du = 2.0 * half / (n - 1) as f64;
    let (s, c) = (lambda.sqrt(), (1.0 - lambda).sqrt());
    let mut total = 0.0;
    for i in 0..n {
        let u = -half + i as f64 * du;
        let wu = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut row = 0.0;
        for j in 0..n {
            let v = -half + j as f64 * du;
            let wv = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            let lp = x.ln_pdf(s * u - c * v) + y.ln_pdf(c * u + s * v);
            if lp > -69.0 {
                row -= wv * lp.exp() * lp;
            }
        }
        total += wu * row;
    }
    Ok(total * du * du)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    const HALF_LOG_2PIE: f64 = 1.418_938_533_204_672_7;

    fn gauss(v: f64) -> Distribution1D {
        Distribution1D::gaussian(v).unwrap()
    }

    fn laplace() -> Distribution1D {
        Distribution1D::laplace(1.0).unwrap()
    }

    #[test]
    fn closed_form_entropies() {
        let h = diff_entropy(&gauss(1.0)).unwrap();
        assert!((h.nats - 1.418_938_5).abs() < 1e-7);
        assert_eq!(h.method, EntropyMethod::ClosedForm);
        assert_eq!(h.err, 0.0);
        assert!((diff_entropy(&laplace()).unwrap().nats - (1.0 + LN_2)).abs() < 1e-15);
    }

    #[test]
    fn mixture_entropy_by_quadrature() {
        let m = Distribution1D::mixture(&[0.5, 0.5], &[-2.0, 2.0], &[1.0, 1.0]).unwrap();
        let h = diff_entropy(&m).unwrap();
        assert_eq!(h.method, EntropyMethod::Quadrature);
        assert!(h.err <= 1e-8);
        // mpmath oracle (tests/oracles/derive.py: h_mix_pm2)
        assert!(
            (h.nats - 2.051_658_726_941_539_7).abs() < 1e-9,
            "{}",
            h.nats
        );
    }

    #[test]
    fn entropy_power_examples() {
        assert!((entropy_power(&gauss(5.0)).unwrap() - 5.0).abs() < 1e-12);
        let n = entropy_power(&laplace()).unwrap();
        assert!((n - 2.0 * E / PI).abs() < 1e-14);
        assert!((n - 1.730_511_958_864_530_2).abs() < 1e-12);
        assert!(n < laplace().power());
    }

    #[test]
    fn renyi_examples() {
        let g = gauss(1.0);
        let h2 = renyi_entropy(&g, 2.0).unwrap();
        assert!((h2.nats - (2.0 * PI.sqrt()).ln()).abs() < 1e-14);
        let h = diff_entropy(&g).unwrap().nats;
        assert!((renyi_entropy(&g, 1.001).unwrap().nats - h).abs() < 1e-3);
        assert!((renyi_entropy(&laplace(), 2.0).unwrap().nats - 4f64.ln()).abs() < 1e-14);
        assert!(renyi_entropy(&g, 1.0).is_err());
        assert!(renyi_entropy(&g, -0.5).is_err());
    }

    #[test]
    fn renyi_quadrature_matches_closed_forms() {
        // Logistic: ∫ f^2 = 1/(6s).
        let s = Distribution1D::logistic(1.5).unwrap();
        let h2 = renyi_entropy(&s, 2.0).unwrap();
        assert_eq!(h2.method, EntropyMethod::Quadrature);
        assert!((h2.nats - 9f64.ln()).abs() < 1e-10);
        // Mixture with one component is Gaussian.
        let m = Distribution1D::mixture(&[1.0], &[0.0], &[2.0]).unwrap();
        for p in [0.5, 0.8, 4.0 / 3.0, 2.0] {
            let a = renyi_entropy(&m, p).unwrap().nats;
            let b = renyi_entropy(&gauss(4.0), p).unwrap().nats;
            assert!((a - b).abs() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn renyi_norm_form_agrees_on_grids() {
        let g = grid::grid_density(&laplace(), 12.0, 1 << 14).unwrap();
        for p in [0.5, 0.8, 4.0 / 3.0, 2.0, 3.0] {
            let h = renyi_entropy(&g, p).unwrap().nats;
            let via_norm = -conjugate(p) * grid::lp_norm(&g, p).unwrap().ln();
            assert!((h - via_norm).abs() < 1e-10, "p={p}");
        }
    }

    #[test]
    fn combo_examples() {
        let h = entropy_of_combo(&[1.0], &[gauss(1.0)]).unwrap();
        assert!((h.nats - HALF_LOG_2PIE).abs() < 1e-15);
        let r = 0.5f64.sqrt();
        let h = entropy_of_combo(&[r, r], &[gauss(1.0), gauss(1.0)]).unwrap();
        assert!((h.nats - HALF_LOG_2PIE).abs() < 1e-15);
        assert_eq!(h.method, EntropyMethod::ClosedForm);
        let g = combo_density(&[r, r], &[gauss(1.0), gauss(1.0)], GridSpec::default()).unwrap();
        assert!((g.entropy() - HALF_LOG_2PIE).abs() < 1e-6);
        let h = entropy_of_combo(&[-2.0, 0.0], &[laplace(), gauss(1.0)]).unwrap();
        assert!((h.nats - (1.0 + 2.0 * LN_2)).abs() < 1e-15);
        let h = entropy_of_combo(&[r, r], &[laplace(), laplace()]).unwrap();
        assert!(h.nats >= 1.0 + LN_2);
        assert!(h.err < 1e-5);
        // mpmath oracle: h_laplace_rot_half
        assert!(
            (h.nats - 1.741_547_089_678_320_9).abs() < 2e-6,
            "{}",
            h.nats
        );
    }

    #[test]
    fn renyi_of_combos() {
        let r = 0.5f64.sqrt();
        let pair = [laplace(), laplace()];
        let spec = GridSpec::default();
        for p in [2.0 / 3.0, 2.0] {
            let grid_single = renyi_of_combo(&[1.0, 0.0], &pair, p, spec).unwrap();
            let exact = renyi_entropy(&laplace(), p).unwrap();
            let diff = (grid_single.nats - exact.nats).abs();
            assert!(
                diff <= grid_single.err + 1e-9 && diff < 5e-6,
                "p={p}: {diff} vs {}",
                grid_single.err
            );
        }
        let g = renyi_of_combo(&[r, r], &[gauss(1.0), gauss(3.0)], 2.0, spec).unwrap();
        assert_eq!(g.method, EntropyMethod::ClosedForm);
        assert!((g.nats - renyi_entropy(&gauss(2.0), 2.0).unwrap().nats).abs() < 1e-14);
        let l = renyi_of_combo(&[r, r], &pair, 2.0, spec).unwrap();
        assert!(l.err < 1e-6);
    }

    #[test]
    fn combo_errors() {
        assert!(entropy_of_combo(&[1.0, 2.0], &[gauss(1.0)]).is_err());
        assert!(entropy_of_combo(&[0.0], &[gauss(1.0)]).is_err());
        assert!(entropy_of_combo(&[f64::NAN], &[gauss(1.0)]).is_err());
        let tiny = GridSpec {
            half_width_sigmas: 3.0,
            points: 1 << 12,
        };
        assert!(matches!(
            combo_density(&[1.0], &[laplace()], tiny),
            Err(EpiError::TailMass { .. })
        ));
    }

    #[test]
    fn rotated_pair_examples() {
        let r = rotated_pair(&gauss(1.0), &gauss(1.0), 0.5).unwrap();
        assert!(r.mutual_info.nats.abs() < 1e-6);
        assert!(r.closure_residual() < 1e-12);

        let r = rotated_pair(&gauss(1.0), &gauss(4.0), 0.5).unwrap();
        assert!((r.mutual_info.nats - 0.223_143_551_314_209_76).abs() < 1e-6);

        let r = rotated_pair(&laplace(), &laplace(), 0.5).unwrap();
        // mpmath oracle: mi_laplace_half
        assert!((r.mutual_info.nats - 0.096_799_818_236_751_235).abs() < 5e-6);
        assert!(r.mutual_info.nats > 10.0 * r.mutual_info.err);
        assert!(rotated_pair(&laplace(), &laplace(), 1.0).is_err());
        assert!(rotated_pair(&laplace(), &laplace(), 0.0).is_err());
    }

    #[test]
    fn joint_entropy_cross_check() {
        for (x, y, lambda) in [
            (gauss(1.0), gauss(4.0), 0.3),
            (laplace(), laplace(), 0.5),
            (laplace(), Distribution1D::logistic(1.0).unwrap(), 0.8),
        ] {
            let direct = rotated_joint_entropy_2d(&x, &y, lambda, 2048).unwrap();
            let identity = rotated_pair(&x, &y, lambda).unwrap().h_uv.nats;
            assert!(
                (direct - identity).abs() < 1e-4,
                "{x} {y}: {direct} vs {identity}"
            );
        }
    }
}
