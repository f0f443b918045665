//! Zero-mean continuous distributions on the real line with positive densities.
//!
//! Every family exposes its lower and upper tails separately (`cdf`/`sf`,
//! `quantile_lower`/`quantile_upper`) so that transport maps stay accurate
//! far into either tail.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{EpiError, Result};

pub const MAX_MIXTURE_COMPONENTS: usize = 8;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_406;

/// Serializable description of a distribution, as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Gaussian {
        variance: f64,
    },
    Laplace {
        scale: f64,
    },
    Logistic {
        scale: f64,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        sds: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    variance: f64,
    sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Laplace {
    scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Logistic {
    scale: f64,
}

/// Mixture with normalized weights and means recentered to a zero overall mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution1D {
    Gaussian(Gaussian),
    Laplace(Laplace),
    Logistic(Logistic),
    GaussianMixture(GaussianMixture),
}

/// Density, log-density and cdf at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub pdf: f64,
    pub logpdf: f64,
    pub cdf: f64,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(EpiError::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

fn std_normal_ln_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

impl Gaussian {
    pub fn new(variance: f64) -> Result<Self> {
        let variance = positive("variance", variance)?;
        Ok(Self {
            variance,
            sd: variance.sqrt(),
        })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        std_normal_ln_pdf(x / self.sd) - self.sd.ln()
    }

    fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf(x / self.sd)
    }

    fn sf(&self, x: f64) -> f64 {
        std_normal_sf(x / self.sd)
    }

    fn quantile_lower(&self, u: f64) -> f64 {
        -self.sd * std_normal_isf(u)
    }

    fn quantile_upper(&self, p: f64) -> f64 {
        self.sd * std_normal_isf(p)
    }
}

/// Standard normal inverse survival function, polished by Halley steps.
fn std_normal_isf(p: f64) -> f64 {
    let mut z = SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let density = std_normal_ln_pdf(z).exp();
        if density == 0.0 {
            break;
        }
        // Residual of sf(z) = p, relative to the density.
        let step = (std_normal_sf(z) - p) / density;
        z += step / (1.0 - 0.5 * z * step);
    }
    z
}

impl Laplace {
    pub fn new(scale: f64) -> Result<Self> {
        Ok(Self {
            scale: positive("scale", scale)?,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        -x.abs() / self.scale - (2.0 * self.scale).ln()
    }

    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.5 * (x / self.scale).exp()
        } else {
            1.0 - 0.5 * (-x / self.scale).exp()
        }
    }

    fn sf(&self, x: f64) -> f64 {
        self.cdf(-x)
    }

    fn quantile_lower(&self, u: f64) -> f64 {
        if u <= 0.5 {
            self.scale * (2.0 * u).ln()
        } else {
            -self.scale * (2.0 * (1.0 - u)).ln()
        }
    }

    fn quantile_upper(&self, p: f64) -> f64 {
        -self.quantile_lower(p)
    }
}

impl Logistic {
    pub fn new(scale: f64) -> Result<Self> {
        Ok(Self {
            scale: positive("scale", scale)?,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let z = x.abs() / self.scale;
        -z - self.scale.ln() - 2.0 * (-z).exp().ln_1p()
    }

    fn cdf(&self, x: f64) -> f64 {
        1.0 / (1.0 + (-x / self.scale).exp())
    }

    fn sf(&self, x: f64) -> f64 {
        self.cdf(-x)
    }

    fn quantile_lower(&self, u: f64) -> f64 {
        self.scale * (u.ln() - (-u).ln_1p())
    }

    fn quantile_upper(&self, p: f64) -> f64 {
        -self.quantile_lower(p)
    }
}

impl GaussianMixture {
    pub fn new(weights: &[f64], means: &[f64], sds: &[f64]) -> Result<Self> {
        let k = weights.len();
        if k == 0 || k > MAX_MIXTURE_COMPONENTS {
            return Err(EpiError::InvalidParameter(format!(
                "mixture needs between 1 and {MAX_MIXTURE_COMPONENTS} components, got {k}"
            )));
        }
        if means.len() != k || sds.len() != k {
            return Err(EpiError::InvalidParameter(
                "mixture weights, means and sds must have equal length".into(),
            ));
        }
        for &w in weights {
            positive("mixture weight", w)?;
        }
        for &s in sds {
            positive("mixture sd", s)?;
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(EpiError::InvalidParameter(
                "mixture means must be finite".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let center: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum();
        let spread = means.iter().fold(0.0f64, |a, m| a.max(m.abs()));
        let means = if center.abs() <= 4.0 * f64::EPSILON * spread {
            means.to_vec()
        } else {
            means.iter().map(|m| m - center).collect()
        };
        Ok(Self {
            weights,
            means,
            sds: sds.to_vec(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sds(&self) -> &[f64] {
        &self.sds
    }

    fn components(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.sds)
            .map(|((&w, &m), &s)| (w, m, s))
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let terms: Vec<f64> = self
            .components()
            .map(|(w, m, s)| w.ln() + std_normal_ln_pdf((x - m) / s) - s.ln())
            .collect();
        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.components()
            .map(|(w, m, s)| w * std_normal_ln_pdf((x - m) / s).exp() / s)
            .sum()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.components()
            .map(|(w, m, s)| w * std_normal_cdf((x - m) / s))
            .sum()
    }

    fn sf(&self, x: f64) -> f64 {
        self.components()
            .map(|(w, m, s)| w * std_normal_sf((x - m) / s))
            .sum()
    }

    fn bracket(&self) -> f64 {
        let max_mean = self.means.iter().fold(0.0f64, |a, m| a.max(m.abs()));
        let max_sd = self.sds.iter().cloned().fold(0.0f64, f64::max);
        max_mean + 12.0 * max_sd
    }

    /// Solves `tail(x) = target` where `tail` is the cdf (`upper == false`)
    /// or the survival function. Bisection keeps the bracket, Newton refines.
    fn solve_tail(&self, target: f64, upper: bool) -> f64 {
        let g = |x: f64| {
            if upper {
                target - self.sf(x)
            } else {
                self.cdf(x) - target
            }
        };
        let mut width = self.bracket();
        let (mut lo, mut hi) = (-width, width);
        while g(lo) > 0.0 && width < 1e6 {
            width *= 2.0;
            lo = -width;
        }
        while g(hi) < 0.0 && width < 1e6 {
            width *= 2.0;
            hi = width;
        }
        let tol = 1e-13 * target;
        let mut x = if upper {
            0.5 * (hi.max(0.0))
        } else {
            0.5 * lo.min(0.0)
        };
        x = x.clamp(lo, hi);
        for _ in 0..300 {
            let gx = g(x);
            if gx.abs() <= tol {
                return x;
            }
            if gx < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let slope = self.pdf(x);
            let newton = x - gx / slope;
            let next = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }
}

impl Distribution1D {
    pub fn gaussian(variance: f64) -> Result<Self> {
        Gaussian::new(variance).map(Self::Gaussian)
    }

    pub fn standard_gaussian() -> Self {
        Self::Gaussian(Gaussian {
            variance: 1.0,
            sd: 1.0,
        })
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        Laplace::new(scale).map(Self::Laplace)
    }

    pub fn logistic(scale: f64) -> Result<Self> {
        Logistic::new(scale).map(Self::Logistic)
    }

    pub fn mixture(weights: &[f64], means: &[f64], sds: &[f64]) -> Result<Self> {
        GaussianMixture::new(weights, means, sds).map(Self::GaussianMixture)
    }

    pub fn from_spec(spec: &DistSpec) -> Result<Self> {
        match spec {
            DistSpec::Gaussian { variance } => Self::gaussian(*variance),
            DistSpec::Laplace { scale } => Self::laplace(*scale),
            DistSpec::Logistic { scale } => Self::logistic(*scale),
            DistSpec::GaussianMixture {
                weights,
                means,
                sds,
            } => Self::mixture(weights, means, sds),
        }
    }

    pub fn spec(&self) -> DistSpec {
        match self {
            Self::Gaussian(g) => DistSpec::Gaussian {
                variance: g.variance(),
            },
            Self::Laplace(l) => DistSpec::Laplace { scale: l.scale },
            Self::Logistic(l) => DistSpec::Logistic { scale: l.scale },
            Self::GaussianMixture(m) => DistSpec::GaussianMixture {
                weights: m.weights.clone(),
                means: m.means.clone(),
                sds: m.sds.clone(),
            },
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Self::Gaussian(_))
    }

    /// True when the density has a kink (Laplace at the origin).
    pub fn has_kink(&self) -> bool {
        matches!(self, Self::Laplace(_))
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian(d) => d.ln_pdf(x),
            Self::Laplace(d) => d.ln_pdf(x),
            Self::Logistic(d) => d.ln_pdf(x),
            Self::GaussianMixture(d) => d.ln_pdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Self::GaussianMixture(d) => d.pdf(x),
            _ => self.ln_pdf(x).exp(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian(d) => d.cdf(x),
            Self::Laplace(d) => d.cdf(x),
            Self::Logistic(d) => d.cdf(x),
            Self::GaussianMixture(d) => d.cdf(x),
        }
    }

    /// Survival function `1 - cdf(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian(d) => d.sf(x),
            Self::Laplace(d) => d.sf(x),
            Self::Logistic(d) => d.sf(x),
            Self::GaussianMixture(d) => d.sf(x),
        }
    }

    /// Inverse of the cdf; accurate for small `u`.
    pub fn quantile_lower(&self, u: f64) -> f64 {
        match self {
            Self::Gaussian(d) => d.quantile_lower(u),
            Self::Laplace(d) => d.quantile_lower(u),
            Self::Logistic(d) => d.quantile_lower(u),
            Self::GaussianMixture(d) => d.solve_tail(u, false),
        }
    }

    /// Inverse of the survival function; accurate for small `p`.
    pub fn quantile_upper(&self, p: f64) -> f64 {
        match self {
            Self::Gaussian(d) => d.quantile_upper(p),
            Self::Laplace(d) => d.quantile_upper(p),
            Self::Logistic(d) => d.quantile_upper(p),
            Self::GaussianMixture(d) => d.solve_tail(p, true),
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<Evaluation> {
        if !x.is_finite() {
            return Err(EpiError::Domain(format!(
                "evaluation point must be finite, got {x}"
            )));
        }
        let logpdf = self.ln_pdf(x);
        Ok(Evaluation {
            pdf: logpdf.exp(),
            logpdf,
            cdf: self.cdf(x),
        })
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(EpiError::Domain(format!(
                "quantile level must lie in (0, 1), got {u}"
            )));
        }
        Ok(if u <= 0.5 {
            self.quantile_lower(u)
        } else {
            self.quantile_upper(1.0 - u)
        })
    }

    /// Inverse-cdf sampling from a seeded ChaCha stream.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let u: f64 = rng.sample(Open01);
                if u <= 0.5 {
                    self.quantile_lower(u)
                } else {
                    self.quantile_upper(1.0 - u)
                }
            })
            .collect()
    }

    /// Second moment `E[X^2]`.
    pub fn power(&self) -> f64 {
        match self {
            Self::Gaussian(d) => d.variance(),
            Self::Laplace(d) => 2.0 * d.scale * d.scale,
            Self::Logistic(d) => d.scale * d.scale * PI * PI / 3.0,
            Self::GaussianMixture(d) => d.components().map(|(w, m, s)| w * (s * s + m * m)).sum(),
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.power().sqrt()
    }

    /// Differential entropy in nats when a closed form exists.
    pub fn closed_form_entropy(&self) -> Option<f64> {
        match self {
            Self::Gaussian(d) => Some(0.5 * (2.0 * PI * std::f64::consts::E * d.variance()).ln()),
            Self::Laplace(d) => Some(1.0 + LN_2 + d.scale.ln()),
            Self::Logistic(d) => Some(d.scale.ln() + 2.0),
            Self::GaussianMixture(_) => None,
        }
    }

    /// Points where integrands built from this density benefit from a breakpoint.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::GaussianMixture(m) => {
                let mut pts = m.means.clone();
                pts.push(0.0);
                pts
            }
            _ => vec![0.0],
        }
    }

    /// Half-width of an interval carrying all but a negligible fraction of the mass.
    pub fn effective_half_width(&self, sigmas: f64) -> f64 {
        match self {
            Self::GaussianMixture(m) => {
                let max_mean = m.means.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                let max_sd = m.sds.iter().cloned().fold(0.0f64, f64::max);
                (max_mean + sigmas * max_sd).max(sigmas * self.std_dev())
            }
            _ => sigmas * self.std_dev(),
        }
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Distribution1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian(d) => write!(f, "gaussian(var={})", d.variance()),
            Self::Laplace(d) => write!(f, "laplace(b={})", d.scale),
            Self::Logistic(d) => write!(f, "logistic(s={})", d.scale),
            Self::GaussianMixture(d) => write!(
                f,
                "mixture(w=[{}],mu=[{}],sd=[{}])",
                fmt_list(&d.weights),
                fmt_list(&d.means),
                fmt_list(&d.sds)
            ),
        }
    }
}
