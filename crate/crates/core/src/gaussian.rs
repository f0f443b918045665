//! Covariance algebra for Gaussian vectors: rotated covariances, Schur
//! complements, determinant means and Gaussian entropies.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{check_lambda, EpiError, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const PIVOT_REL: f64 = 1e-12;

/// Symmetric positive definite matrix together with its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    m: DMatrix<f64>,
    l: DMatrix<f64>,
}

fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0f64, f64::max);
    let threshold = PIVOT_REL * max_diag;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let s = m[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if !(s > threshold) {
            return Err(EpiError::NotSpd(format!(
                "Cholesky pivot {j} is {s:e}, threshold {threshold:e}"
            )));
        }
        let d = s.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let t = m[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = t / d;
        }
    }
    Ok(l)
}

impl CovMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(EpiError::Dimension(format!(
                "covariance must be square and nonempty, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(EpiError::NotSpd("covariance has non-finite entries".into()));
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(EpiError::NotSpd(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let l = cholesky(&m)?;
        Ok(Self { m, l })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(EpiError::Dimension(
                "covariance rows must all have length n".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn scalar(v: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, v))
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(
            &nalgebra::DVector::from_column_slice(d),
        ))
    }

    /// Symmetrizes `m` before validation; used for results of matrix arithmetic.
    fn from_computed(m: DMatrix<f64>) -> Result<Self> {
        let sym = (&m + m.transpose()) * 0.5;
        Self::new(sym)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn det(&self) -> f64 {
        self.log_det().exp()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let l_inv = self
            .l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("Cholesky factor has a positive diagonal");
        let inv = l_inv.transpose() * l_inv;
        (&inv + inv.transpose()) * 0.5
    }

    /// Seeded `A·Aᵀ + 0.1·I` with standard normal `A`.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Result<Self> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self::from_computed(&a * a.transpose() + DMatrix::identity(n, n) * 0.1)
    }
}

fn same_dim(a: &CovMatrix, b: &CovMatrix) -> Result<()> {
    if a.dim() == b.dim() {
        Ok(())
    } else {
        Err(EpiError::Dimension(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )))
    }
}

/// `½ log((2πe)ⁿ |K|)`.
pub fn gaussian_entropy(k: &CovMatrix) -> f64 {
    0.5 * (k.dim() as f64 * (2.0 * PI * E).ln() + k.log_det())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotatedCovariances {
    pub ku: CovMatrix,
    pub kv: CovMatrix,
    /// Cross-covariance `E[U Vᵀ]`; symmetric but not definite.
    pub kuv: DMatrix<f64>,
}

impl RotatedCovariances {
    /// Covariance of the stacked vector `(U, V)`.
    pub fn joint(&self) -> Result<CovMatrix> {
        let n = self.ku.dim();
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(self.ku.matrix());
        j.view_mut((n, n), (n, n)).copy_from(self.kv.matrix());
        j.view_mut((0, n), (n, n)).copy_from(&self.kuv);
        j.view_mut((n, 0), (n, n)).copy_from(&self.kuv.transpose());
        CovMatrix::from_computed(j)
    }
}

/// Covariances of `U = √λX + √(1-λ)Y`, `V = -√(1-λ)X + √λY` for independent `X`, `Y`.
pub fn rotated_covariances(
    kx: &CovMatrix,
    ky: &CovMatrix,
    lambda: f64,
) -> Result<RotatedCovariances> {
    same_dim(kx, ky)?;
    check_lambda(lambda)?;
    let (x, y) = (kx.matrix(), ky.matrix());
    let ku = CovMatrix::new(x * lambda + y * (1.0 - lambda))?;
    let kv = CovMatrix::new(x * (1.0 - lambda) + y * lambda)?;
    let kuv = (y - x) * (lambda * (1.0 - lambda)).sqrt();
    Ok(RotatedCovariances { ku, kv, kuv })
}

/// `K_U − K_UV K_V⁻¹ K_VU`.
pub fn schur_conditional(ku: &CovMatrix, kv: &CovMatrix, kuv: &DMatrix<f64>) -> Result<CovMatrix> {
    if kuv.nrows() != ku.dim() || kuv.ncols() != kv.dim() {
        return Err(EpiError::Dimension(format!(
            "cross-covariance is {}×{}, expected {}×{}",
            kuv.nrows(),
            kuv.ncols(),
            ku.dim(),
            kv.dim()
        )));
    }
    let correction = kuv * kv.inverse() * kuv.transpose();
    CovMatrix::from_computed(ku.matrix() - correction)
}

/// `[λK_X⁻¹ + (1−λ)K_Y⁻¹]⁻¹`.
pub fn harmonic_mean(kx: &CovMatrix, ky: &CovMatrix, lambda: f64) -> Result<CovMatrix> {
    same_dim(kx, ky)?;
    check_lambda(lambda)?;
    let precision =
        CovMatrix::from_computed(kx.inverse() * lambda + ky.inverse() * (1.0 - lambda))?;
    CovMatrix::from_computed(precision.inverse())
}

/// Frobenius norm of `K_{U|V} − [λK_X⁻¹ + (1−λ)K_Y⁻¹]⁻¹`.
pub fn harmonic_identity_gap(kx: &CovMatrix, ky: &CovMatrix, lambda: f64) -> Result<f64> {
    let r = rotated_covariances(kx, ky, lambda)?;
    let schur = schur_conditional(&r.ku, &r.kv, &r.kuv)?;
    let harmonic = harmonic_mean(kx, ky, lambda)?;
    Ok((schur.matrix() - harmonic.matrix()).norm())
}

/// Determinants of the harmonic, geometric and arithmetic matrix means, with logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetMeanChain {
    pub harmonic: f64,
    pub geometric: f64,
    pub arithmetic: f64,
    pub log_harmonic: f64,
    pub log_geometric: f64,
    pub log_arithmetic: f64,
}

impl DetMeanChain {
    /// Smallest of the two slacks `log G − log H` and `log A − log G`.
    pub fn slack(&self) -> f64 {
        (self.log_geometric - self.log_harmonic).min(self.log_arithmetic - self.log_geometric)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.slack() >= -tol
    }
}

pub fn det_mean_chain(kx: &CovMatrix, ky: &CovMatrix, lambda: f64) -> Result<DetMeanChain> {
    let log_harmonic = harmonic_mean(kx, ky, lambda)?.log_det();
    let log_geometric = lambda * kx.log_det() + (1.0 - lambda) * ky.log_det();
    let log_arithmetic =
        CovMatrix::new(kx.matrix() * lambda + ky.matrix() * (1.0 - lambda))?.log_det();
    Ok(DetMeanChain {
        harmonic: log_harmonic.exp(),
        geometric: log_geometric.exp(),
        arithmetic: log_arithmetic.exp(),
        log_harmonic,
        log_geometric,
        log_arithmetic,
    })
}

/// `log|λK_X + (1−λ)K_Y| − λ log|K_X| − (1−λ) log|K_Y|`.
pub fn ky_fan_gap(kx: &CovMatrix, ky: &CovMatrix, lambda: f64) -> Result<f64> {
    let c = det_mean_chain(kx, ky, lambda)?;
    Ok(c.log_arithmetic - c.log_geometric)
}

/// `I(U;V) = ½ log(|K_U||K_V| / |K_(U,V)|)` for the rotated Gaussian pair.
pub fn bernstein_gaussian_mi(kx: &CovMatrix, ky: &CovMatrix, lambda: f64) -> Result<f64> {
    let r = rotated_covariances(kx, ky, lambda)?;
    let joint = r.joint()?;
    Ok(0.5 * (r.ku.log_det() + r.kv.log_det() - joint.log_det()))
}

/// Checks that the rows of `a` are orthonormal within `tol`.
pub fn check_orthonormal_rows(a: &DMatrix<f64>, tol: f64) -> Result<()> {
    let gram = a * a.transpose();
    let dev = (gram - DMatrix::identity(a.nrows(), a.nrows())).amax();
    if a.nrows() > a.ncols() || dev > tol {
        return Err(EpiError::InvalidParameter(format!(
            "matrix rows are not orthonormal (max deviation {dev:e})"
        )));
    }
    Ok(())
}

/// `h(AX) − Σᵢⱼ aᵢⱼ² h(Xⱼ)` for independent centered Gaussian `Xⱼ` with the given variances.
pub fn zamir_feder_gaussian_gap(a: &DMatrix<f64>, variances: &[f64]) -> Result<(f64, f64)> {
    if a.ncols() != variances.len() {
        return Err(EpiError::Dimension(format!(
            "matrix has {} columns for {} components",
            a.ncols(),
            variances.len()
        )));
    }
    check_orthonormal_rows(a, 1e-10)?;
    let d = CovMatrix::diagonal(variances)?;
    let k = CovMatrix::from_computed(a * d.matrix() * a.transpose())?;
    let lhs = gaussian_entropy(&k);
    let rhs = (0..a.nrows())
        .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)].powi(2) * 0.5 * (2.0 * PI * E * variances[j]).ln())
        .sum();
    Ok((lhs, rhs))
}

/// `k × n` matrix with orthonormal rows from a seeded Gaussian draw.
pub fn random_orthonormal_rows<R: Rng>(k: usize, n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    if k == 0 || k > n {
        return Err(EpiError::Dimension(format!(
            "cannot draw {k} orthonormal rows in dimension {n}"
        )));
    }
    let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    Ok(q.transpose())
}
