//! Multiple testing with the shrinkage-weight thresholding rule under
//! Gaussian scale-mixture priors.
//!
//! Observations `X_i = θ_i + ε_i` with `ε_i ~ N(0, 1)` and a prior
//! `θ_i | σ_i² ~ N(0, σ_i²)`, `σ_i² ~ π`. The test for `θ_i = 0` rejects when the
//! posterior mean of `κ_i = σ_i²/(1 + σ_i²)` exceeds a level `α`.

pub mod adaptive;
pub mod error;
pub mod harness;
pub mod prior;
pub mod quadrature;
pub mod risk;
pub mod rng;
pub mod shrinkage;
pub mod stats;
pub mod testing;

pub use error::{Error, Result};
