//! Spectral Galerkin simulation of the stochastic KdV equation driven by
//! Lévy noise, with Monte Carlo estimators for its a-priori bounds.

pub mod coefficients;
pub mod estimators;
pub mod initial;
pub mod noise;
pub mod rng;
pub mod solver;
pub mod spectral;
pub mod trajectory;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
