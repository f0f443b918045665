//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{EpiError, Result};

/// Default absolute tolerance for free-form integrands.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_SUBDIVISIONS: usize = 4000;

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub err_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, err }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    integrate_with_breaks(f, &[a, b], tol)
}

/// Integrates over `[points[0], points[last]]`, seeding the adaptive pool with
/// the given breakpoints so that known kinks sit on segment boundaries.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    points: &[f64],
    tol: f64,
) -> Result<QuadratureResult> {
    if points.len() < 2 {
        return Err(EpiError::InvalidParameter(
            "need at least two integration limits".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(EpiError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if points.windows(2).any(|w| !(w[0] < w[1])) || points.iter().any(|p| !p.is_finite()) {
        return Err(EpiError::Domain(format!(
            "integration limits must be finite and increasing: {points:?}"
        )));
    }

    let mut heap = BinaryHeap::new();
    let mut evaluations = 0usize;
    for w in points.windows(2) {
        heap.push(kronrod15(&f, w[0], w[1]));
        evaluations += 15;
    }

    loop {
        let (value, err) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
        if !value.is_finite() {
            return Err(EpiError::Domain(
                "integrand produced a non-finite value".into(),
            ));
        }
        if err <= tol {
            return Ok(QuadratureResult {
                value,
                err_estimate: err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if heap.len() + 2 > MAX_SUBDIVISIONS || !(worst.a < mid && mid < worst.b) {
            heap.push(worst);
            let (value, err) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.err));
            return Err(EpiError::Quadrature {
                estimate: value,
                error: err,
                evaluations,
            });
        }
        heap.push(kronrod15(&f, worst.a, mid));
        heap.push(kronrod15(&f, mid, worst.b));
        evaluations += 30;
    }
}
