use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    change_of_variable, deficit_sandwich, epi_lieb, epi_power_concavity, epi_shannon,
    equality_diagnostics, gaussian_matrix, proof_chain, renyi_epi, reverse_epi,
    reverse_equivalence, transport_pushforward, young_check, zamir_feder, zamir_feder_matrix,
    CheckContext, CheckOutcome,
};
use crate::dist::Distribution1D;
use crate::error::{EpiError, Result};

/// One cell of work for a check.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckInput {
    Pair {
        x: Distribution1D,
        y: Distribution1D,
    },
    PairLambda {
        x: Distribution1D,
        y: Distribution1D,
        lambda: f64,
    },
    Renyi {
        x: Distribution1D,
        y: Distribution1D,
        lambda: f64,
        r: f64,
    },
    Young {
        x: Distribution1D,
        y: Distribution1D,
        p: f64,
        q: f64,
        r: f64,
    },
    Linear {
        coeffs: Vec<f64>,
        dists: Vec<Distribution1D>,
    },
    GaussianRows {
        matrix: DMatrix<f64>,
        variances: Vec<f64>,
    },
    Target {
        target: Distribution1D,
    },
    RandomCovariance {
        dim: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    EpiShannon,
    EpiLieb,
    EpiPowerConcavity,
    ReverseEpi,
    DeficitSandwich,
    ProofChain,
    EqualityDiagnostics,
    ReverseEquivalence,
    ZamirFeder,
    RenyiEpi,
    YoungCheck,
    ChangeOfVariable,
    TransportPushforward,
    GaussianMatrix,
}

impl CheckKind {
    pub const ALL: [CheckKind; 14] = [
        Self::EpiShannon,
        Self::EpiLieb,
        Self::EpiPowerConcavity,
        Self::ReverseEpi,
        Self::DeficitSandwich,
        Self::ProofChain,
        Self::EqualityDiagnostics,
        Self::ReverseEquivalence,
        Self::ZamirFeder,
        Self::RenyiEpi,
        Self::YoungCheck,
        Self::ChangeOfVariable,
        Self::TransportPushforward,
        Self::GaussianMatrix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::EpiShannon => "epi_shannon",
            Self::EpiLieb => "epi_lieb",
            Self::EpiPowerConcavity => "epi_power_concavity",
            Self::ReverseEpi => "reverse_epi",
            Self::DeficitSandwich => "deficit_sandwich",
            Self::ProofChain => "proof_chain",
            Self::EqualityDiagnostics => "equality_diagnostics",
            Self::ReverseEquivalence => "reverse_equivalence",
            Self::ZamirFeder => "zamir_feder",
            Self::RenyiEpi => "renyi_epi",
            Self::YoungCheck => "young_check",
            Self::ChangeOfVariable => "change_of_variable",
            Self::TransportPushforward => "transport_pushforward",
            Self::GaussianMatrix => "gaussian_matrix",
        }
    }

    /// One-line mathematical statement.
    pub fn statement(self) -> &'static str {
        match self {
            Self::EpiShannon => "N(X+Y) >= N(X) + N(Y) for independent X, Y, with N = exp(2h)/(2 pi e)",
            Self::EpiLieb => "h(sqrt(l) X + sqrt(1-l) Y) >= l h(X) + (1-l) h(Y), 0 < l < 1",
            Self::EpiPowerConcavity => "N(sqrt(l) X + sqrt(1-l) Y) >= l N(X) + (1-l) N(Y), 0 < l < 1",
            Self::ReverseEpi => {
                "h(U | V) <= l h(X) + (1-l) h(Y) with U = sqrt(l) X + sqrt(1-l) Y, V = -sqrt(1-l) X + sqrt(l) Y"
            }
            Self::DeficitSandwich => "0 <= h(U) - l h(X) - (1-l) h(Y) <= I(U; V)",
            Self::ProofChain => {
                "transport proof of the EPI: two change-of-variable identities, a Jensen step, a \
                 conditioning step and the Gaussian equality line, whose gaps sum to the EPI gap"
            }
            Self::EqualityDiagnostics => {
                "equality requires constant and equal transport derivatives T', U' and a vanishing EPI gap"
            }
            Self::ReverseEquivalence => {
                "the reverse-EPI gap equals the gap of (1-l) h(X) + l h(Y) <= h(-sqrt(1-l) X + sqrt(l) Y)"
            }
            Self::ZamirFeder => {
                "h(sum a_i X_i) >= sum a_i^2 h(X_i) for sum a_i^2 = 1; h(AX) >= sum a_ij^2 h(X_j) for A \
                 with orthonormal rows (Gaussian components)"
            }
            Self::RenyiEpi => {
                "h_r(sqrt(l) X + sqrt(1-l) Y) - l h_p(X) - (1-l) h_q(Y) >= the same for i.i.d. Gaussians, \
                 with 1/p' = l/r' and 1/q' = (1-l)/r'"
            }
            Self::YoungCheck => {
                "A_r |f*g|_r <= A_p |f|_p A_q |g|_q for p, q, r > 1 (reversed for p, q, r in (0,1)), \
                 1/p + 1/q = 1 + 1/r, A_m = sqrt(m^(1/m) / |m'|^(1/m'))"
            }
            Self::ChangeOfVariable => "h(T(X*)) = h(X*) + E[log T'(X*)] for T = F_target^-1 o Phi",
            Self::TransportPushforward => {
                "T(X*) has the target law (Kolmogorov-Smirnov) and T' matches central differences"
            }
            Self::GaussianMatrix => {
                "K_U|V = [l K_X^-1 + (1-l) K_Y^-1]^-1; |harmonic| <= |geometric| <= |arithmetic|; \
                 h(K_U) - l h(K_X) - (1-l) h(K_Y) = (1/2) Ky Fan gap; I(U;V) >= 0"
            }
        }
    }

    /// Acceptance contract for the reported rows.
    pub fn contract(self) -> &'static str {
        match self {
            Self::EpiShannon | Self::EpiLieb | Self::EpiPowerConcavity | Self::ReverseEpi => {
                "gap >= -tol; tol 1e-5 for grid-backed values, 1e-9 for closed forms; equality only for \
                 Gaussians of equal power"
            }
            Self::DeficitSandwich => "both steps gap >= -tol; both vanish only for Gaussians of equal power",
            Self::ProofChain => {
                "transport residuals |r| < 1e-5; Jensen and conditioning gaps >= -tol; Gaussian line |r| < 1e-6; \
                 telescoping residual against the EPI gap < 1e-4"
            }
            Self::EqualityDiagnostics => {
                "equality regime declared only if both derivative deviations and the EPI gap are below 1e-6"
            }
            Self::ReverseEquivalence => "the two gaps agree within tol",
            Self::ZamirFeder => "coefficients normalized within 1e-10; gap >= -tol",
            Self::RenyiEpi => "exponents feasible for the regime of r; gap >= -tol; equality for Gaussians",
            Self::YoungCheck => "exponents compatible and in a single regime; gap >= -tol; norms from grids",
            Self::ChangeOfVariable => "|residual| < 1e-6",
            Self::TransportPushforward => {
                "KS statistic below the critical value at level alpha; max relative derivative error < 1e-5"
            }
            Self::GaussianMatrix => "harmonic identity < 1e-10; determinant chain and reduction within 1e-12",
        }
    }

    /// Shape of input the check consumes.
    pub fn input_shape(self) -> &'static str {
        match self {
            Self::EpiShannon => "pairs",
            Self::RenyiEpi => "pairs x lambdas x exponents (r)",
            Self::YoungCheck => "pairs x exponents (p, q, r)",
            Self::ZamirFeder => "linear combinations, random unit vectors, Gaussian row matrices",
            Self::ChangeOfVariable | Self::TransportPushforward => "targets",
            Self::GaussianMatrix => "random covariance pairs (dims x draws)",
            _ => "pairs x lambdas",
        }
    }

    pub fn evaluate(self, input: &CheckInput, ctx: &CheckContext) -> Result<CheckOutcome> {
        use CheckInput as I;
        let outcome: CheckOutcome = match (self, input) {
            (Self::EpiShannon, I::Pair { x, y }) => epi_shannon(x, y, ctx)?.into(),
            (Self::EpiLieb, I::PairLambda { x, y, lambda }) => epi_lieb(x, y, *lambda, ctx)?.into(),
            (Self::EpiPowerConcavity, I::PairLambda { x, y, lambda }) => {
                epi_power_concavity(x, y, *lambda, ctx)?.into()
            }
            (Self::ReverseEpi, I::PairLambda { x, y, lambda }) => {
                reverse_epi(x, y, *lambda, ctx)?.into()
            }
            (Self::DeficitSandwich, I::PairLambda { x, y, lambda }) => {
                deficit_sandwich(x, y, *lambda, ctx)?.into()
            }
            (Self::ProofChain, I::PairLambda { x, y, lambda }) => {
                proof_chain(x, y, *lambda, ctx)?.into()
            }
            (Self::EqualityDiagnostics, I::PairLambda { x, y, lambda }) => {
                equality_diagnostics(x, y, *lambda, ctx)?.into()
            }
            (Self::ReverseEquivalence, I::PairLambda { x, y, lambda }) => {
                reverse_equivalence(x, y, *lambda, ctx)?.into()
            }
            (Self::ZamirFeder, I::Linear { coeffs, dists }) => {
                zamir_feder(coeffs, dists, ctx)?.into()
            }
            (Self::ZamirFeder, I::GaussianRows { matrix, variances }) => {
                zamir_feder_matrix(matrix, variances, ctx)?.into()
            }
            (Self::RenyiEpi, I::Renyi { x, y, lambda, r }) => {
                renyi_epi(x, y, *lambda, *r, ctx)?.into()
            }
            (Self::YoungCheck, I::Young { x, y, p, q, r }) => {
                young_check(x, y, *p, *q, *r, ctx)?.into()
            }
            (Self::ChangeOfVariable, I::Target { target }) => {
                change_of_variable(target, ctx)?.into()
            }
            (Self::TransportPushforward, I::Target { target }) => {
                transport_pushforward(target, ctx)?.into()
            }
            (Self::GaussianMatrix, I::RandomCovariance { dim, seed }) => {
                gaussian_matrix(*dim, *seed, ctx)?.into()
            }
            (kind, input) => {
                return Err(EpiError::InvalidParameter(format!(
                    "check {kind} does not accept input {input:?}"
                )))
            }
        };
        Ok(outcome)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = EpiError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| EpiError::InvalidParameter(format!("unknown check `{s}`")))
    }
}
