use thiserror::Error;

pub type Result<T> = std::result::Result<T, EpiError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpiError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: estimate {estimate} with error {error} after {evaluations} evaluations")]
    Quadrature {
        estimate: f64,
        error: f64,
        evaluations: usize,
    },

    #[error("grid span too small: tail mass {tail_mass:e} exceeds {limit:e}")]
    TailMass { tail_mass: f64, limit: f64 },

    #[error("grid mismatch: spacing {left} vs {right}")]
    GridMismatch { left: f64, right: f64 },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("exponent constraint violated: {0}")]
    Exponent(String),

    #[error("solver failed: {0}")]
    Solver(String),

    #[error("step `{step}` failed: {source}")]
    Step {
        step: String,
        #[source]
        source: Box<EpiError>,
    },
}

impl EpiError {
    pub(crate) fn in_step(step: &str) -> impl FnOnce(EpiError) -> EpiError + '_ {
        move |source| EpiError::Step {
            step: step.to_string(),
            source: Box::new(source),
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 && lambda < 1.0 {
        Ok(())
    } else {
        Err(EpiError::Domain(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )))
    }
}
