//! Monte Carlo estimators over ensembles of Galerkin trajectories.
//!
//! Ensembles run in parallel; per-trajectory results are collected by index
//! and reduced sequentially, so every output depends only on the master
//! seed and the configuration.

pub mod aldous;
pub mod ito;
pub mod moments;
pub mod stats;
pub mod taylor;

use rayon::prelude::*;
use thiserror::Error;

use crate::solver::{simulate, GalerkinSystem, SolverConfig, SolverError};
use crate::spectral::GalerkinState;
use crate::trajectory::Trajectory;

pub use aldous::{aldous_check, validate_thetas, AldousReport, StoppingRule};
pub use ito::{ito_decomposition, martingale_check, ItoPaths, MartingaleReport};
pub use moments::{
    check_moment_orders, estimate_moments, moment_window, refinement_check, strong_order_check, EnsembleStatistics,
    MomentOptions, RefinementReport, StrongOrderReport,
};
pub use stats::{Estimate, LineFit, NeumaierSum};
pub use taylor::{minimal_constants, taylor_remainder_check, TaylorConstants, TaylorReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("moment order p = {p} outside the admissible window [{lo}, {hi}]")]
    InvalidMomentOrder { p: f64, lo: f64, hi: f64 },
    #[error("at least {required} trajectories are required, got {got}")]
    TooFewTrajectories { required: usize, got: usize },
    #[error("{count} of {n_traj} trajectories blew up at m = {m} (more than 1%)")]
    TooManyBlowUps { m: usize, count: usize, n_traj: usize },
    #[error("invalid lags: {0}")]
    InvalidThetas(String),
    #[error("trajectory and model do not match: {0}")]
    Mismatch(String),
    #[error("invalid estimator option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Everything needed to generate one ensemble.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: SolverConfig,
    pub system: GalerkinSystem,
    pub u0: GalerkinState,
}

impl Run {
    pub fn m(&self) -> usize {
        self.system.grid.m()
    }
}

/// Simulates trajectories `0..n_traj` in parallel and maps each through `f`.
/// Results come back in trajectory order.
pub fn map_ensemble<T, F>(run: &Run, n_traj: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, Result<Trajectory, SolverError>) -> T + Sync,
{
    (0..n_traj as u64)
        .into_par_iter()
        .map(|i| f(i, simulate(&run.config, &run.system, &run.u0, i)))
        .collect()
}

/// Blow-ups are tolerated up to one percent of an ensemble.
pub(crate) fn check_blowups(m: usize, count: usize, n_traj: usize) -> Result<(), EstimatorError> {
    if count * 100 > n_traj {
        return Err(EstimatorError::TooManyBlowUps { m, count, n_traj });
    }
    Ok(())
}
