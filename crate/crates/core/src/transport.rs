//! Monotone transport maps: the 1-D quantile coupling `T = F_target⁻¹ ∘ F_source`
//! and 2-D triangular (Knöthe) maps for product and Gaussian targets.

use std::f64::consts::{E, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::Distribution1D;
use crate::entropy::{diff_entropy, EntropyValue};
use crate::error::{check_lambda, EpiError, Result};
use crate::numerics::hermite::{adaptive_gaussian_points, GaussHermite, DEFAULT_NODES};
use crate::numerics::quadrature::integrate_with_breaks;

pub const PROBE_POINTS: usize = 10_000;
/// Sources are truncated at this many standard deviations for probes and expectations.
pub const SOURCE_HALF_WIDTH_SIGMAS: f64 = 10.0;
pub const RETRY_NODES: usize = 160;

const PUSHFORWARD_TOL: f64 = 1e-10;
const EXPECTATION_TOL: f64 = 1e-10;
const PANEL_TOL: f64 = 1e-14;

/// Increasing map pushing `source` forward to `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transport1D {
    source: Distribution1D,
    target: Distribution1D,
}

impl Transport1D {
    /// Builds the map and validates monotonicity, positivity of `T′` and the
    /// pushforward identity on a probe grid.
    pub fn new(source: Distribution1D, target: Distribution1D) -> Result<Self> {
        let t = Self { source, target };
        t.validate()?;
        Ok(t)
    }

    pub fn source(&self) -> &Distribution1D {
        &self.source
    }

    pub fn target(&self) -> &Distribution1D {
        &self.target
    }

    pub fn half_width(&self) -> f64 {
        self.source.effective_half_width(SOURCE_HALF_WIDTH_SIGMAS)
    }

    fn validate(&self) -> Result<()> {
        let w = self.half_width();
        let step = 2.0 * w / (PROBE_POINTS - 1) as f64;
        let mut prev = f64::NEG_INFINITY;
        for k in 0..PROBE_POINTS {
            let x = -w + k as f64 * step;
            let y = self.apply(x);
            if !y.is_finite() || y <= prev {
                return Err(EpiError::Solver(format!(
                    "transport {} -> {} is not strictly increasing at x = {x}",
                    self.source, self.target
                )));
            }
            prev = y;
            let d = self.derivative(x);
            if !(d.is_finite() && d > 0.0) {
                return Err(EpiError::Solver(format!("T'({x}) = {d} is not positive")));
            }
            let (lhs, rhs) = if self.source.cdf(x) <= 0.5 {
                (self.target.cdf(y), self.source.cdf(x))
            } else {
                (self.target.sf(y), self.source.sf(x))
            };
            if (lhs - rhs).abs() > PUSHFORWARD_TOL {
                return Err(EpiError::Solver(format!(
                    "pushforward mismatch at x = {x}: {lhs} vs {rhs}"
                )));
            }
        }
        Ok(())
    }

    /// `T(x)`, evaluated through whichever tail keeps full relative precision.
    pub fn apply(&self, x: f64) -> f64 {
        let u = self.source.cdf(x);
        if u <= 0.5 {
            self.target.quantile_lower(u)
        } else {
            self.target.quantile_upper(self.source.sf(x))
        }
    }

    /// `T⁻¹(y)`.
    pub fn inverse(&self, y: f64) -> f64 {
        let u = self.target.cdf(y);
        if u <= 0.5 {
            self.source.quantile_lower(u)
        } else {
            self.source.quantile_upper(self.target.sf(y))
        }
    }

    /// `ln T′(x) = ln f_source(x) − ln f_target(T(x))`.
    pub fn ln_derivative(&self, x: f64) -> f64 {
        self.source.ln_pdf(x) - self.target.ln_pdf(self.apply(x))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.ln_derivative(x).exp()
    }

    /// Source-side points where `T′` may have a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        let w = self.half_width();
        let mut pts = self.source.breakpoints();
        pts.extend(
            self.target
                .breakpoints()
                .into_iter()
                .map(|b| self.inverse(b)),
        );
        pts.push(-w);
        pts.push(w);
        pts.retain(|p| p.is_finite() && p.abs() <= w);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * w);
        pts
    }

    /// `E_source[ln T′(X)]` by adaptive quadrature over the truncated source range.
    pub fn expected_ln_derivative(&self) -> Result<(f64, f64)> {
        let pts = self.breakpoints();
        let r = integrate_with_breaks(
            |x| {
                let lp = self.source.ln_pdf(x);
                if lp < -745.0 {
                    0.0
                } else {
                    lp.exp() * self.ln_derivative(x)
                }
            },
            &pts,
            EXPECTATION_TOL,
        )?;
        let (lo, hi) = (pts[0], pts[pts.len() - 1]);
        let tail = self.source.cdf(lo) * self.ln_derivative(lo).abs()
            + self.source.sf(hi) * self.ln_derivative(hi).abs();
        Ok((r.value, r.err_estimate + 2.0 * tail))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeOfVariableReport {
    pub h_source: EntropyValue,
    pub h_target: EntropyValue,
    pub expected_ln_derivative: f64,
    /// `h(target) − h(source) − E[ln T′]`.
    pub residual: f64,
    pub err: f64,
}

/// Certifies `h(T(X)) = h(X) + E[ln T′(X)]`.
pub fn verify_change_of_variable(t: &Transport1D) -> Result<ChangeOfVariableReport> {
    let h_source = diff_entropy(&t.source)?;
    let h_target = diff_entropy(&t.target)?;
    let (e, e_err) = t.expected_ln_derivative()?;
    Ok(ChangeOfVariableReport {
        h_source,
        h_target,
        expected_ln_derivative: e,
        residual: h_target.nats - h_source.nats - e,
        err: h_source.err + h_target.err + e_err,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenReport {
    /// `E[ln(λT′(X*) + (1−λ)U′(Y*))]`.
    pub e_mix: f64,
    /// `λE[ln T′(X*)] + (1−λ)E[ln U′(Y*)]`.
    pub mix_of_e: f64,
    pub gap: f64,
    pub nodes: usize,
}

fn is_standard_gaussian(d: &Distribution1D) -> bool {
    matches!(d, Distribution1D::Gaussian(g) if (g.variance() - 1.0).abs() < 1e-12)
}

fn needs_panels(t: &Transport1D) -> bool {
    t.source.has_kink()
        || t.target.has_kink()
        || matches!(t.target, Distribution1D::GaussianMixture(_))
}

/// Probability-weighted points for a standard Gaussian axis: Gauss–Hermite
/// for smooth unimodal maps, breakpoint-aligned panels when `T′` has a kink
/// or a sharp interior bump.
fn axis_rule(t: &Transport1D, nodes: usize) -> Result<(Vec<(f64, f64)>, usize)> {
    if needs_panels(t) {
        let pts = adaptive_gaussian_points(
            1.0,
            t.half_width(),
            &t.breakpoints(),
            |x| t.ln_derivative(x),
            PANEL_TOL,
        )?;
        let n = pts.len();
        Ok((pts, n))
    } else {
        Ok((
            GaussHermite::new(nodes)?.gaussian_points(1.0).collect(),
            nodes,
        ))
    }
}

fn jensen_with_nodes(
    tx: &Transport1D,
    ty: &Transport1D,
    lambda: f64,
    nodes: usize,
) -> Result<JensenReport> {
    let (px, nx) = axis_rule(tx, nodes)?;
    let (py, ny) = axis_rule(ty, nodes)?;
    let lx: Vec<(f64, f64)> = px
        .into_iter()
        .map(|(x, w)| (w, tx.ln_derivative(x)))
        .collect();
    let ly: Vec<(f64, f64)> = py
        .into_iter()
        .map(|(y, w)| (w, ty.ln_derivative(y)))
        .collect();
    if lx.iter().chain(&ly).any(|(_, v)| !v.is_finite()) {
        return Err(EpiError::Solver(format!(
            "transport derivative underflowed on a {nodes}-node rule"
        )));
    }
    let (a, b) = (lambda.ln(), (1.0 - lambda).ln());
    let mut e_mix = 0.0;
    let mut pointwise_gap = 0.0;
    for &(wx, ltx) in &lx {
        let mut row = 0.0;
        let mut row_gap = 0.0;
        for &(wy, lty) in &ly {
            let (p, q) = (a + ltx, b + lty);
            let m = p.max(q);
            let mixed = m + ((p - m).exp() + (q - m).exp()).ln();
            row += wy * mixed;
            row_gap += wy * (mixed - lambda * ltx - (1.0 - lambda) * lty);
        }
        e_mix += wx * row;
        pointwise_gap += wx * row_gap;
    }
    let mix_of_e = lambda * lx.iter().map(|(w, v)| w * v).sum::<f64>()
        + (1.0 - lambda) * ly.iter().map(|(w, v)| w * v).sum::<f64>();
    Ok(JensenReport {
        e_mix,
        mix_of_e,
        gap: pointwise_gap,
        nodes: nx.max(ny),
    })
}

/// Both sides of the Jensen step for transports out of standard Gaussians.
/// The gap is accumulated pointwise so it is nonnegative up to rounding.
pub fn jensen_expectation(tx: &Transport1D, ty: &Transport1D, lambda: f64) -> Result<JensenReport> {
    check_lambda(lambda)?;
    if !is_standard_gaussian(&tx.source) || !is_standard_gaussian(&ty.source) {
        return Err(EpiError::InvalidParameter(
            "Jensen step requires standard Gaussian sources".into(),
        ));
    }
    jensen_with_nodes(tx, ty, lambda, DEFAULT_NODES)
        .or_else(|_| jensen_with_nodes(tx, ty, lambda, RETRY_NODES))
}

/// Target law of a 2-D triangular map.
#[derive(Debug, Clone, PartialEq)]
pub enum Target2D {
    Product(Distribution1D, Distribution1D),
    Gaussian([[f64; 2]; 2]),
}

/// Lower Cholesky factor `(l11, l21, l22)` of a 2×2 SPD matrix.
pub fn cholesky_2x2(k: [[f64; 2]; 2]) -> Result<(f64, f64, f64)> {
    let finite = k.iter().flatten().all(|v| v.is_finite());
    let scale = k[0][0].abs().max(k[1][1].abs());
    if !finite || (k[0][1] - k[1][0]).abs() > 1e-12 * scale.max(1.0) {
        return Err(EpiError::NotSpd(format!(
            "{k:?} is not a finite symmetric matrix"
        )));
    }
    let pivot = 1e-12 * scale;
    if !(k[0][0] > pivot) {
        return Err(EpiError::NotSpd(format!(
            "{k:?}: leading pivot {} too small",
            k[0][0]
        )));
    }
    let l11 = k[0][0].sqrt();
    let l21 = k[1][0] / l11;
    let s = k[1][1] - l21 * l21;
    if !(s > pivot) {
        return Err(EpiError::NotSpd(format!(
            "{k:?}: Schur complement {s} too small"
        )));
    }
    Ok((l11, l21, s.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
enum Knothe {
    Product(Transport1D, Transport1D),
    /// `T₁ = l11 z₁`, `T₂ = l21 z₁ + l22 z₂` with `zᵢ` the Gaussianizing maps.
    Gaussian {
        z1: Transport1D,
        z2: Transport1D,
        l11: f64,
        l21: f64,
        l22: f64,
    },
}

/// Triangular map `(x₁, x₂) ↦ (T₁(x₁), T₂(x₁, x₂))` from a product source.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotheMap2D {
    source: [Distribution1D; 2],
    target: Target2D,
    map: Knothe,
}

impl KnotheMap2D {
    pub fn new(source: [Distribution1D; 2], target: Target2D) -> Result<Self> {
        let map = match &target {
            Target2D::Product(t1, t2) => Knothe::Product(
                Transport1D::new(source[0].clone(), t1.clone())?,
                Transport1D::new(source[1].clone(), t2.clone())?,
            ),
            Target2D::Gaussian(k) => {
                let (l11, l21, l22) = cholesky_2x2(*k)?;
                let std = Distribution1D::standard_gaussian();
                Knothe::Gaussian {
                    z1: Transport1D::new(source[0].clone(), std.clone())?,
                    z2: Transport1D::new(source[1].clone(), std)?,
                    l11,
                    l21,
                    l22,
                }
            }
        };
        Ok(Self {
            source,
            target,
            map,
        })
    }

    pub fn source(&self) -> &[Distribution1D; 2] {
        &self.source
    }

    pub fn target(&self) -> &Target2D {
        &self.target
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        match &self.map {
            Knothe::Product(t1, t2) => [t1.apply(x[0]), t2.apply(x[1])],
            Knothe::Gaussian {
                z1,
                z2,
                l11,
                l21,
                l22,
            } => {
                let (a, b) = (z1.apply(x[0]), z2.apply(x[1]));
                [l11 * a, l21 * a + l22 * b]
            }
        }
    }

    /// Lower-triangular Jacobian `[[∂₁T₁, 0], [∂₁T₂, ∂₂T₂]]`.
    pub fn jacobian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        match &self.map {
            Knothe::Product(t1, t2) => [[t1.derivative(x[0]), 0.0], [0.0, t2.derivative(x[1])]],
            Knothe::Gaussian {
                z1,
                z2,
                l11,
                l21,
                l22,
            } => {
                let (d1, d2) = (z1.derivative(x[0]), z2.derivative(x[1]));
                [[l11 * d1, 0.0], [l21 * d1, l22 * d2]]
            }
        }
    }

    /// `ln det T′(x) = ln ∂₁T₁ + ln ∂₂T₂`.
    pub fn ln_jacobian_det(&self, x: [f64; 2]) -> f64 {
        match &self.map {
            Knothe::Product(t1, t2) => t1.ln_derivative(x[0]) + t2.ln_derivative(x[1]),
            Knothe::Gaussian {
                z1, z2, l11, l22, ..
            } => (l11 * l22).ln() + z1.ln_derivative(x[0]) + z2.ln_derivative(x[1]),
        }
    }

    pub fn jacobian_det(&self, x: [f64; 2]) -> f64 {
        self.ln_jacobian_det(x).exp()
    }

    /// The matrix of the map when it is linear (Gaussian source and target).
    pub fn linear_factor(&self) -> Option<[[f64; 2]; 2]> {
        let gaussian_source = self.source.iter().all(Distribution1D::is_gaussian);
        match (&self.map, &self.target) {
            (Knothe::Gaussian { l11, l21, l22, .. }, _) if gaussian_source => {
                let (s1, s2) = (self.source[0].std_dev(), self.source[1].std_dev());
                Some([[l11 / s1, 0.0], [l21 / s1, l22 / s2]])
            }
            (Knothe::Product(..), Target2D::Product(t1, t2))
                if gaussian_source && t1.is_gaussian() && t2.is_gaussian() =>
            {
                Some([
                    [t1.std_dev() / self.source[0].std_dev(), 0.0],
                    [0.0, t2.std_dev() / self.source[1].std_dev()],
                ])
            }
            _ => None,
        }
    }

    fn target_entropy(&self) -> Result<EntropyValue> {
        match &self.target {
            Target2D::Product(a, b) => Ok(EntropyValue::combine(&[
                (1.0, diff_entropy(a)?),
                (1.0, diff_entropy(b)?),
            ])),
            Target2D::Gaussian(k) => {
                let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
                Ok(EntropyValue::closed_form(
                    0.5 * ((2.0 * PI * E).powi(2) * det).ln(),
                ))
            }
        }
    }

    fn source_half_widths(&self) -> [f64; 2] {
        [
            self.source[0].effective_half_width(SOURCE_HALF_WIDTH_SIGMAS),
            self.source[1].effective_half_width(SOURCE_HALF_WIDTH_SIGMAS),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeOfVariable2DReport {
    pub h_source: EntropyValue,
    pub h_target: EntropyValue,
    pub expected_ln_det: f64,
    pub residual: f64,
    pub err: f64,
}

fn axis_points(d: &Distribution1D, w: f64) -> Vec<f64> {
    let mut pts = d.breakpoints();
    pts.push(-w);
    pts.push(w);
    pts.retain(|p| p.abs() <= w);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Certifies `h(T(X)) = h(X) + E[ln det T′(X)]` with a nested adaptive
/// quadrature over the truncated product source.
pub fn verify_change_of_variable_2d(m: &KnotheMap2D) -> Result<ChangeOfVariable2DReport> {
    let [s1, s2] = &m.source;
    let h_source = EntropyValue::combine(&[(1.0, diff_entropy(s1)?), (1.0, diff_entropy(s2)?)]);
    let h_target = m.target_entropy()?;
    let [w1, w2] = m.source_half_widths();
    let mut outer_pts = axis_points(s1, w1);
    let mut inner_pts = axis_points(s2, w2);
    if let Knothe::Product(t1, t2) = &m.map {
        outer_pts = t1.breakpoints();
        inner_pts = t2.breakpoints();
    }
    let inner_err = std::cell::Cell::new(0.0f64);
    let outer = integrate_with_breaks(
        |x1| {
            let p1 = s1.pdf(x1);
            if p1 == 0.0 {
                return 0.0;
            }
            match integrate_with_breaks(
                |x2| s2.pdf(x2) * m.ln_jacobian_det([x1, x2]),
                &inner_pts,
                1e-11,
            ) {
                Ok(r) => {
                    inner_err.set(inner_err.get().max(r.err_estimate));
                    p1 * r.value
                }
                Err(_) => f64::NAN,
            }
        },
        &outer_pts,
        1e-10,
    )?;
    let edge = [[-w1, -w2], [-w1, w2], [w1, -w2], [w1, w2]]
        .iter()
        .map(|&x| m.ln_jacobian_det(x).abs())
        .fold(0.0, f64::max);
    let tail = 2.0 * (s1.cdf(-w1) + s1.sf(w1) + s2.cdf(-w2) + s2.sf(w2)) * edge.max(1.0);
    let e = outer.value;
    Ok(ChangeOfVariable2DReport {
        h_source,
        h_target,
        expected_ln_det: e,
        residual: h_target.nats - h_source.nats - e,
        err: h_source.err + h_target.err + outer.err_estimate + inner_err.get() + tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsReport {
    pub statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub samples: usize,
}

impl KsReport {
    pub fn passes(&self) -> bool {
        self.statistic < self.critical_value
    }
}

/// Asymptotic one-sample Kolmogorov–Smirnov critical value.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(0.5 * alpha).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Pushes `n` seeded source samples through `t` and tests them against the target cdf.
pub fn pushforward_ks(t: &Transport1D, n: usize, seed: u64, alpha: f64) -> Result<KsReport> {
    if n == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(EpiError::InvalidParameter(
            "need n > 0 and 0 < alpha < 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seed2 = rand::Rng::gen::<u64>(&mut rng);
    let mut pushed: Vec<f64> = t
        .source
        .sample(n, seed2)
        .into_iter()
        .map(|x| t.apply(x))
        .collect();
    let statistic = ks_statistic(&mut pushed, |y| t.target.cdf(y));
    Ok(KsReport {
        statistic,
        critical_value: ks_critical_value(n, alpha),
        alpha,
        samples: n,
    })
}

/// Largest relative difference between `T′` and a central difference with
/// step `1e-5 · σ_source` on an `n`-point probe grid over `±half_width_sigmas`.
pub fn derivative_fd_max_rel_err(t: &Transport1D, n: usize, half_width_sigmas: f64) -> f64 {
    let sigma = t.source.std_dev();
    let h = 1e-5 * sigma;
    let w = half_width_sigmas * sigma;
    // Offset keeps probes off the kinks at the origin.
    let step = 2.0 * w / n as f64;
    (0..n)
        .map(|k| -w + (k as f64 + 0.37) * step)
        .map(|x| {
            let fd = (t.apply(x + h) - t.apply(x - h)) / (2.0 * h);
            let d = t.derivative(x);
            ((fd - d) / d).abs()
        })
        .fold(0.0, f64::max)
}
