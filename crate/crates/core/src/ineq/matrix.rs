use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{ChainReport, CheckContext, InequalityReport, Inputs};
use crate::error::{EpiError, Result};
use crate::gaussian::{
    bernstein_gaussian_mi, det_mean_chain, gaussian_entropy, harmonic_identity_gap,
    rotated_covariances, CovMatrix,
};

const HARMONIC_TOL: f64 = 1e-10;
const CHAIN_TOL: f64 = 1e-12;

/// Covariance identities and determinant inequalities for one seeded random
/// SPD pair `(K_X, K_Y)` of dimension `n`, with `λ` drawn from the same stream.
pub fn gaussian_matrix(n: usize, seed: u64, ctx: &CheckContext) -> Result<ChainReport> {
    if n == 0 {
        return Err(EpiError::Dimension(
            "matrix dimension must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kx = CovMatrix::random(n, &mut rng)?;
    let ky = CovMatrix::random(n, &mut rng)?;
    let lambda: f64 = rng.gen_range(0.05..0.95);
    let mut inputs = Inputs::new();
    inputs.insert("dim".into(), json!(n));
    inputs.insert("seed".into(), json!(seed));
    inputs.insert("lambda".into(), json!(lambda));

    let harmonic = harmonic_identity_gap(&kx, &ky, lambda)?;
    let chain = det_mean_chain(&kx, &ky, lambda)?;
    let ky_fan = chain.log_arithmetic - chain.log_geometric;
    let ku = rotated_covariances(&kx, &ky, lambda)?.ku;
    let reduction = gaussian_entropy(&ku)
        - lambda * gaussian_entropy(&kx)
        - (1.0 - lambda) * gaussian_entropy(&ky);
    let mi = bernstein_gaussian_mi(&kx, &ky, lambda)?;
    let tol = ctx.scaled(CHAIN_TOL);
    let steps = vec![
        InequalityReport::identity(
            "harmonic_identity",
            harmonic,
            0.0,
            0.0,
            ctx.scaled(HARMONIC_TOL),
            inputs.clone(),
        ),
        InequalityReport::inequality(
            "harmonic_le_geometric",
            chain.log_harmonic,
            chain.log_geometric,
            chain.log_geometric - chain.log_harmonic,
            0.0,
            tol,
            inputs.clone(),
        ),
        InequalityReport::inequality(
            "ky_fan",
            chain.log_arithmetic,
            chain.log_geometric,
            ky_fan,
            0.0,
            tol,
            inputs.clone(),
        ),
        InequalityReport::identity(
            "entropy_reduction",
            reduction,
            0.5 * ky_fan,
            0.0,
            tol,
            inputs.clone(),
        ),
        InequalityReport::inequality("mutual_information", mi, 0.0, mi, 0.0, tol, inputs.clone()),
    ];
    Ok(ChainReport::new("gaussian_matrix", steps, None, inputs))
}
