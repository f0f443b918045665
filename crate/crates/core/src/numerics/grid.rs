//! Densities sampled on uniform grids.
//!
//! Grids produced here always place the origin on a node, so kinks at zero
//! (Laplace) fall on a node and scaled grids stay on a common lattice.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::dist::Distribution1D;
use crate::error::{EpiError, Result};

pub const DEFAULT_HALF_WIDTH_SIGMAS: f64 = 12.0;
pub const DEFAULT_POINTS: usize = 1 << 14;
pub const MIN_POINTS: usize = 1 << 10;
pub const MIN_CONSTRUCTION_POINTS: usize = 1 << 12;
/// Largest analytic mass allowed outside a constructed grid.
pub const MAX_TAIL_MASS: f64 = 1e-6;

/// Below this value a sample contributes nothing to entropy integrals.
const NEGLIGIBLE_DENSITY: f64 = 1e-30;
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDensity {
    x0: f64,
    dx: f64,
    values: Vec<f64>,
    mass: f64,
    /// Analytic probability mass outside the grid, when known.
    tail_mass: f64,
    /// Factor the samples were divided by, if renormalized.
    renormalized_by: Option<f64>,
}

fn trapezoid(values: impl Iterator<Item = f64>, dx: f64) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    dx * (sum - 0.5 * (first.unwrap_or(0.0) + last))
}

impl GridDensity {
    /// Wraps raw samples. Negative samples are rejected.
    pub fn from_values(x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite() && x0.is_finite()) {
            return Err(EpiError::InvalidParameter(format!(
                "bad grid geometry x0={x0}, dx={dx}"
            )));
        }
        if values.len() < 2 {
            return Err(EpiError::InvalidParameter(
                "grid needs at least two samples".into(),
            ));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(EpiError::InvalidParameter(
                "grid samples must be finite and nonnegative".into(),
            ));
        }
        let mass = trapezoid(values.iter().copied(), dx);
        Ok(Self {
            x0,
            dx,
            values,
            mass,
            tail_mass: 0.0,
            renormalized_by: None,
        })
    }

    /// Samples `f` at `x0 + k dx` for `k < n`.
    pub fn from_fn<F: Fn(f64) -> f64>(x0: f64, dx: f64, n: usize, f: F) -> Result<Self> {
        let values = (0..n).map(|k| f(x0 + k as f64 * dx)).collect();
        Self::from_values(x0, dx, values)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn renormalized_by(&self) -> Option<f64> {
        self.renormalized_by
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn x_last(&self) -> f64 {
        self.x(self.values.len() - 1)
    }

    /// Copy rescaled to unit trapezoid mass; the factor is recorded.
    pub fn normalized(&self) -> Self {
        let m = self.mass;
        Self {
            values: self.values.iter().map(|v| v / m).collect(),
            mass: 1.0,
            renormalized_by: Some(m * self.renormalized_by.unwrap_or(1.0)),
            ..self.clone()
        }
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.dx;
        if t < 0.0 || t > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let k = (t.floor() as usize).min(self.values.len() - 2);
        let frac = t - k as f64;
        self.values[k] * (1.0 - frac) + self.values[k + 1] * frac
    }

    /// `-∫ f ln f` by the trapezoid rule.
    pub fn entropy(&self) -> f64 {
        trapezoid(
            self.values.iter().map(|&v| {
                if v < NEGLIGIBLE_DENSITY {
                    0.0
                } else {
                    -v * v.max(LOG_FLOOR).ln()
                }
            }),
            self.dx,
        )
    }

    /// Entropy together with a Richardson estimate of its discretization error
    /// (the same integral on every other node) plus the analytic tail mass.
    pub fn entropy_with_error(&self) -> (f64, f64) {
        let fine = self.entropy();
        let coarse = trapezoid(
            self.values.iter().step_by(2).map(|&v| {
                if v < NEGLIGIBLE_DENSITY {
                    0.0
                } else {
                    -v * v.max(LOG_FLOOR).ln()
                }
            }),
            2.0 * self.dx,
        );
        let richardson = (fine - coarse).abs() / 3.0;
        (fine, richardson + self.tail_mass)
    }

    /// `∫ f^p` by the trapezoid rule.
    pub fn integral_pow(&self, p: f64) -> f64 {
        trapezoid(
            self.values
                .iter()
                .map(|&v| if v > 0.0 { v.powf(p) } else { 0.0 }),
            self.dx,
        )
    }

    /// `∫ f^p` with a Richardson error estimate from the every-other-node sum.
    pub fn integral_pow_with_error(&self, p: f64) -> (f64, f64) {
        let fine = self.integral_pow(p);
        let coarse = trapezoid(
            self.values
                .iter()
                .step_by(2)
                .map(|&v| if v > 0.0 { v.powf(p) } else { 0.0 }),
            2.0 * self.dx,
        );
        (fine, (fine - coarse).abs() / 3.0)
    }
}

/// Samples `d` on `n` nodes spanning `±half_width_sigmas·√P(d)`.
pub fn grid_density(d: &Distribution1D, half_width_sigmas: f64, n: usize) -> Result<GridDensity> {
    if !n.is_power_of_two() || n < MIN_CONSTRUCTION_POINTS {
        return Err(EpiError::InvalidParameter(format!(
            "grid size must be a power of two >= {MIN_CONSTRUCTION_POINTS}, got {n}"
        )));
    }
    if !(half_width_sigmas > 0.0) {
        return Err(EpiError::InvalidParameter(
            "half width must be positive".into(),
        ));
    }
    let half = half_width_sigmas * d.std_dev();
    grid_density_with_spacing(d, 2.0 * half / n as f64, n)
}

/// Samples `d` on `n` nodes with spacing `dx`, node `n/2` at the origin.
pub(crate) fn grid_density_with_spacing(
    d: &Distribution1D,
    dx: f64,
    n: usize,
) -> Result<GridDensity> {
    let x0 = -((n / 2) as f64) * dx;
    let mut grid = GridDensity::from_fn(x0, dx, n, |x| d.pdf(x))?;
    let tail = d.cdf(x0) + d.sf(grid.x_last());
    if tail > MAX_TAIL_MASS {
        return Err(EpiError::TailMass {
            tail_mass: tail,
            limit: MAX_TAIL_MASS,
        });
    }
    grid.tail_mass = tail;
    Ok(grid)
}

/// Density of `X + Y` for independent `X ~ f`, `Y ~ g` on a shared spacing.
pub fn convolve(f: &GridDensity, g: &GridDensity) -> Result<GridDensity> {
    if ((f.dx - g.dx) / f.dx).abs() > 1e-12 {
        return Err(EpiError::GridMismatch {
            left: f.dx,
            right: g.dx,
        });
    }
    let out_len = f.len() + g.len() - 1;
    let fft_len = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(fft_len);
    let inverse = planner.plan_fft_inverse(fft_len);

    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(fft_len, Complex::new(0.0, 0.0));
        buf
    };
    let mut a = pad(&f.values);
    let mut b = pad(&g.values);
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inverse.process(&mut a);

    let scale = f.dx / fft_len as f64;
    // One trailing zero keeps power-of-two inputs at a power-of-two output length.
    let mut values: Vec<f64> = a[..out_len]
        .iter()
        .map(|c| (c.re * scale).max(0.0))
        .collect();
    if out_len + 1 <= fft_len {
        values.push(0.0);
    }
    let mut out = GridDensity::from_values(f.x0 + g.x0, f.dx, values)?;
    out.tail_mass = f.tail_mass + g.tail_mass;
    Ok(out)
}

/// Density of `aX` given the density of `X`.
pub fn scale_density(f: &GridDensity, a: f64) -> Result<GridDensity> {
    if a == 0.0 || !a.is_finite() {
        return Err(EpiError::Domain(format!(
            "scale factor must be finite and nonzero, got {a}"
        )));
    }
    let inv = 1.0 / a.abs();
    let mut values: Vec<f64> = f.values.iter().map(|v| v * inv).collect();
    let x0 = if a > 0.0 {
        a * f.x0
    } else {
        values.reverse();
        a * f.x_last()
    };
    Ok(GridDensity {
        x0,
        dx: a.abs() * f.dx,
        mass: f.mass,
        values,
        tail_mass: f.tail_mass,
        renormalized_by: f.renormalized_by,
    })
}

/// `(∫ f^p)^{1/p}`.
pub fn lp_norm(f: &GridDensity, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(EpiError::InvalidParameter(format!(
            "L^p exponent must be positive, got {p}"
        )));
    }
    Ok(f.integral_pow(p).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn gaussian_grid(var: f64) -> GridDensity {
        grid_density(
            &Distribution1D::gaussian(var).unwrap(),
            12.0,
            DEFAULT_POINTS,
        )
        .unwrap()
    }

    #[test]
    fn gaussian_grid_mass_and_entropy() {
        let g = gaussian_grid(1.0);
        assert!((g.mass() - 1.0).abs() < 1e-10);
        assert_eq!(g.len(), 1 << 14);
        assert!((g.values()[g.len() / 2] - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-16);
        for var in [0.25, 1.0, 4.0, 16.0] {
            let h = gaussian_grid(var).entropy();
            let exact = 0.5 * (2.0 * PI * std::f64::consts::E * var).ln();
            assert!((h - exact).abs() < 1e-7, "var={var}: {h} vs {exact}");
        }
    }

    #[test]
    fn laplace_and_logistic_grid_entropy() {
        let l = grid_density(&Distribution1D::laplace(1.0).unwrap(), 12.0, DEFAULT_POINTS).unwrap();
        assert!(
            (l.entropy() - (1.0 + LN_2)).abs() < 1e-6,
            "{}",
            l.entropy() - 1.0 - LN_2
        );
        let s = grid_density(
            &Distribution1D::logistic(1.0).unwrap(),
            12.0,
            DEFAULT_POINTS,
        )
        .unwrap();
        assert!((s.entropy() - 2.0).abs() < 1e-6, "{}", s.entropy() - 2.0);
    }

    #[test]
    fn construction_errors() {
        let d = Distribution1D::laplace(1.0).unwrap();
        assert!(grid_density(&d, 12.0, 1000).is_err());
        assert!(grid_density(&d, 12.0, 1 << 11).is_err());
        assert!(matches!(
            grid_density(&d, 4.0, 1 << 12),
            Err(EpiError::TailMass { .. })
        ));
    }

    #[test]
    fn gaussian_self_convolution() {
        let g = gaussian_grid(1.0);
        let c = convolve(&g, &g).unwrap();
        assert!((c.mass() - 1.0).abs() < 1e-8);
        let target = Distribution1D::gaussian(2.0).unwrap();
        let worst = (0..c.len())
            .map(|k| (c.values()[k] - target.pdf(c.x(k))).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn narrow_gaussian_is_approximate_identity() {
        let dx = 0.005;
        let f = grid_density_with_spacing(&Distribution1D::logistic(1.0).unwrap(), dx, 1 << 13)
            .unwrap();
        let narrow =
            grid_density_with_spacing(&Distribution1D::gaussian(1e-4).unwrap(), dx, 1 << 12)
                .unwrap();
        let c = convolve(&f, &narrow).unwrap();
        for k in (0..f.len()).step_by(97) {
            let x = f.x(k);
            assert!((c.value_at(x) - f.values()[k]).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn laplace_self_convolution_matches_closed_form() {
        let l = grid_density(&Distribution1D::laplace(1.0).unwrap(), 12.0, DEFAULT_POINTS).unwrap();
        let c = convolve(&l, &l).unwrap();
        let exact = |x: f64| (-x.abs()).exp() * (1.0 + x.abs()) / 4.0;
        let worst = (0..c.len())
            .map(|k| (c.values()[k] - exact(c.x(k))).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn convolution_is_commutative_and_checks_spacing() {
        let a = grid_density_with_spacing(&Distribution1D::laplace(1.0).unwrap(), 0.01, 1 << 12)
            .unwrap();
        let b = grid_density_with_spacing(&Distribution1D::logistic(0.5).unwrap(), 0.01, 1 << 12)
            .unwrap();
        let ab = convolve(&a, &b).unwrap();
        let ba = convolve(&b, &a).unwrap();
        let worst = ab
            .values()
            .iter()
            .zip(ba.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10);
        let c = grid_density_with_spacing(&Distribution1D::logistic(0.5).unwrap(), 0.02, 1 << 12)
            .unwrap();
        assert!(matches!(
            convolve(&a, &c),
            Err(EpiError::GridMismatch { .. })
        ));
    }

    #[test]
    fn scaling() {
        let g = gaussian_grid(1.0);
        assert_eq!(scale_density(&g, 1.0).unwrap(), g);
        let g2 = scale_density(&g, 2.0).unwrap();
        let target = Distribution1D::gaussian(4.0).unwrap();
        for k in (0..g2.len()).step_by(131) {
            assert!((g2.values()[k] - target.pdf(g2.x(k))).abs() < 1e-15);
        }
        let l = grid_density(&Distribution1D::laplace(1.0).unwrap(), 14.0, 1 << 15).unwrap();
        let a = 0.5f64.sqrt();
        let ls = scale_density(&l, a).unwrap();
        assert!(
            (ls.entropy() - (1.0 + LN_2 + 0.5 * 0.5f64.ln())).abs() < 1e-6,
            "{}",
            ls.entropy() - (1.0 + LN_2 + 0.5 * 0.5f64.ln())
        );
        assert!((ls.entropy() - l.entropy() - a.ln()).abs() < 1e-6);
        assert!((ls.entropy() - l.entropy() - a.ln() * l.mass()).abs() < 1e-13);
        let neg = scale_density(&l, -a).unwrap();
        assert!((neg.entropy() - ls.entropy()).abs() < 1e-12);
        assert!(scale_density(&l, 0.0).is_err());
    }

    #[test]
    fn lp_norms() {
        let g = gaussian_grid(1.0);
        assert!((lp_norm(&g, 1.0).unwrap() - 1.0).abs() < 1e-8);
        assert!((lp_norm(&g, 2.0).unwrap() - (4.0 * PI).powf(-0.25)).abs() < 1e-10);
        let l = grid_density(&Distribution1D::laplace(1.0).unwrap(), 12.0, DEFAULT_POINTS).unwrap();
        assert!((lp_norm(&l, 2.0).unwrap() - 0.5).abs() < 1e-6);
        assert!(lp_norm(&l, 0.0).is_err());
    }

    #[test]
    fn renormalization_is_recorded() {
        let l = grid_density(&Distribution1D::laplace(1.0).unwrap(), 12.0, DEFAULT_POINTS).unwrap();
        assert!(l.renormalized_by().is_none());
        let n = l.normalized();
        assert_eq!(n.mass(), 1.0);
        assert_eq!(n.renormalized_by(), Some(l.mass()));
    }
}
