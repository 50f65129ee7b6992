//! Exact N-soliton solutions of the coupled (multi-component) Hirota equations
//! from reflectionless Riemann-Hilbert data, plus independent numerical checks:
//! finite-difference PDE and zero-curvature residuals, and direct scattering
//! through Jost solutions.

pub mod dressing;
pub mod error;
pub mod export;
pub mod laxpair;
pub mod linalg;
pub mod ode;
pub mod scattering;
pub mod spectral;
pub mod types;

pub use error::{Error, Result};
pub use types::*;

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
