//! Gauss–Hermite rules and tensor-product expectations under independent
//! centered Gaussians.

use std::f64::consts::PI;

use crate::error::{EpiError, Result};

pub const DEFAULT_NODES: usize = 96;
pub const MIN_NODES: usize = 32;
/// The asymptotic starting guesses stop separating the largest roots beyond this size.
pub const MAX_NODES: usize = 180;

/// Nodes and weights for the weight function `exp(-t^2)` on the real line.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Newton iteration on the orthonormal Hermite recurrence, with the
    /// classical asymptotic starting guesses for the largest roots.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_NODES {
            return Err(EpiError::InvalidParameter(format!(
                "Gauss–Hermite rule size must lie in 1..={MAX_NODES}, got {n}"
            )));
        }
        let pim4 = PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..100 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(EpiError::Solver(format!(
                    "Hermite root {i} of {n} did not converge"
                )));
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Abscissae for `N(0, sigma^2)` together with probability weights that sum to one.
    pub fn gaussian_points(&self, sigma: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let scale = std::f64::consts::SQRT_2 * sigma;
        let norm = 1.0 / PI.sqrt();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (scale * t, w * norm))
    }

    pub fn expect_1d<F: Fn(f64) -> f64>(&self, g: F, sigma: f64) -> f64 {
        self.gaussian_points(sigma).map(|(x, w)| w * g(x)).sum()
    }

    pub fn expect_2d<F: Fn(f64, f64) -> f64>(&self, g: F, sigma_x: f64, sigma_y: f64) -> f64 {
        let ys: Vec<(f64, f64)> = self.gaussian_points(sigma_y).collect();
        self.gaussian_points(sigma_x)
            .map(|(x, wx)| wx * ys.iter().map(|&(y, wy)| wy * g(x, y)).sum::<f64>())
            .sum()
    }
}

/// `E[g(X, Y)]` for independent `X ~ N(0, sigma_x^2)`, `Y ~ N(0, sigma_y^2)`.
pub fn gauss_hermite_expect_2d<F: Fn(f64, f64) -> f64>(
    g: F,
    sigma_x: f64,
    sigma_y: f64,
    nodes: usize,
) -> Result<f64> {
    if nodes < MIN_NODES {
        return Err(EpiError::InvalidParameter(format!(
            "at least {MIN_NODES} nodes per axis required, got {nodes}"
        )));
    }
    if !(sigma_x > 0.0 && sigma_y > 0.0) {
        return Err(EpiError::InvalidParameter(
            "standard deviations must be positive".into(),
        ));
    }
    Ok(GaussHermite::new(nodes)?.expect_2d(g, sigma_x, sigma_y))
}

const LEGENDRE_POINTS: usize = 10;
const PANEL_WIDTH_SIGMAS: f64 = 0.25;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

/// Probability-weighted points for `N(0, sigma^2)` built from composite
/// Gauss–Legendre panels on `[-half_width, half_width]`, with every breakpoint
/// on a panel boundary. Suited to integrands with kinks, where Gauss–Hermite
/// converges slowly.
pub fn piecewise_gaussian_points(
    sigma: f64,
    half_width: f64,
    breakpoints: &[f64],
) -> Result<Vec<(f64, f64)>> {
    adaptive_gaussian_points(sigma, half_width, breakpoints, |_| 0.0, f64::INFINITY)
}

const MAX_PANEL_DEPTH: u32 = 14;

/// Like [`piecewise_gaussian_points`], but each panel is halved until the
/// panel estimate of `∫ φ g` agrees with the sum over its halves within `tol`.
pub fn adaptive_gaussian_points<G: Fn(f64) -> f64>(
    sigma: f64,
    half_width: f64,
    breakpoints: &[f64],
    g: G,
    tol: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(sigma > 0.0 && half_width > 0.0) {
        return Err(EpiError::InvalidParameter(
            "scale and half width must be positive".into(),
        ));
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.abs() < half_width)
        .collect();
    cuts.push(-half_width);
    cuts.push(half_width);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (gl_x, gl_w) = gauss_legendre(LEGENDRE_POINTS);
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let panel = |a: f64, b: f64| -> Vec<(f64, f64)> {
        let (c, h) = (0.5 * (a + b), b - a);
        gl_x.iter()
            .zip(&gl_w)
            .map(|(t, w)| {
                let x = c + 0.5 * h * t;
                (x, 0.5 * h * w * norm * (-0.5 * (x / sigma).powi(2)).exp())
            })
            .collect()
    };
    let estimate = |pts: &[(f64, f64)]| pts.iter().map(|(x, w)| w * g(*x)).sum::<f64>();
    let mut out = Vec::new();
    for seg in cuts.windows(2) {
        let panels = ((seg[1] - seg[0]) / (PANEL_WIDTH_SIGMAS * sigma))
            .ceil()
            .max(1.0) as usize;
        let h = (seg[1] - seg[0]) / panels as f64;
        let mut stack: Vec<(f64, f64, u32)> = (0..panels)
            .rev()
            .map(|k| (seg[0] + k as f64 * h, seg[0] + (k + 1) as f64 * h, 0))
            .collect();
        while let Some((a, b, depth)) = stack.pop() {
            let whole = panel(a, b);
            if tol.is_finite() && depth < MAX_PANEL_DEPTH {
                let m = 0.5 * (a + b);
                let halves = estimate(&panel(a, m)) + estimate(&panel(m, b));
                if (estimate(&whole) - halves).abs() > tol {
                    stack.push((m, b, depth + 1));
                    stack.push((a, m, depth + 1));
                    continue;
                }
            }
            out.extend(whole);
        }
    }
    Ok(out)
}
