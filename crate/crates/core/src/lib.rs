//! Numerical laboratory for the entropy-power inequality.

pub mod acceptance;
pub mod cli;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod gaussian;
pub mod ineq;
pub mod numerics;
pub mod transport;

pub use dist::{DistSpec, Distribution1D};
pub use error::{EpiError, Result};
