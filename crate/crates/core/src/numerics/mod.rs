//! Integration engines: adaptive quadrature, Gauss–Hermite expectations and
//! grid densities with FFT convolution.

pub mod grid;
pub mod hermite;
pub mod quadrature;

pub use grid::{convolve, grid_density, lp_norm, scale_density, GridDensity};
pub use hermite::{gauss_hermite_expect_2d, GaussHermite};
pub use quadrature::{integrate_1d, integrate_with_breaks, QuadratureResult};
