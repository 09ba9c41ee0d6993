//! Increment scaling `E |u(τ+ϑ) − u(τ)|_{U'} ≈ C ϑ^b` over stopping times
//! `τ`, fitted on a log–log scale.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::stats::{fit_line, Estimate, LineFit};
use super::{check_blowups, map_ensemble, EstimatorError, Run};
use crate::solver::SolverError;
use crate::spectral::{NormKind, SpectralGrid};
use crate::trajectory::Trajectory;

/// Total order wrapper so `f64` norms can live in a heap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Streaming median of all values pushed so far.
#[derive(Debug, Default)]
pub struct RunningMedian {
    low: BinaryHeap<Key>,
    high: BinaryHeap<Reverse<Key>>,
}

impl RunningMedian {
    pub fn push(&mut self, x: f64) {
        match self.low.peek() {
            Some(&Key(top)) if x > top => self.high.push(Reverse(Key(x))),
            _ => self.low.push(Key(x)),
        }
        if self.low.len() > self.high.len() + 1 {
            let v = self.low.pop().unwrap();
            self.high.push(Reverse(v));
        } else if self.high.len() > self.low.len() {
            let Reverse(v) = self.high.pop().unwrap();
            self.low.push(v);
        }
    }

    pub fn median(&self) -> Option<f64> {
        let lo = self.low.peek()?.0;
        if self.low.len() > self.high.len() {
            Some(lo)
        } else {
            Some(0.5 * (lo + self.high.peek().unwrap().0 .0))
        }
    }
}

/// Rules producing bounded stopping times from the observed path.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StoppingRule {
    #[default]
    /// First grid time at which `|u|_H` exceeds the median of its earlier
    /// grid values.
    RunningMedianCrossing,
    Fixed {
        time: f64,
    },
    /// First grid time with `|u|_H ≥ level`.
    LevelCrossing {
        level: f64,
    },
}

impl StoppingRule {
    /// `τ ∧ cap` for one path.
    pub fn stopping_time(&self, traj: &Trajectory, cap: f64) -> f64 {
        let norms = traj.states.iter().map(|s| s.h_norm_sq().sqrt());
        let tau = match *self {
            StoppingRule::Fixed { time } => time,
            StoppingRule::LevelCrossing { level } => traj
                .times
                .iter()
                .zip(norms)
                .find(|(_, n)| *n >= level)
                .map_or(f64::INFINITY, |(t, _)| *t),
            StoppingRule::RunningMedianCrossing => {
                let mut med = RunningMedian::default();
                let mut found = f64::INFINITY;
                for (t, n) in traj.times.iter().zip(norms) {
                    if let Some(m) = med.median() {
                        if n > m {
                            found = *t;
                            break;
                        }
                    }
                    med.push(n);
                }
                found
            }
        };
        tau.min(cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AldousReport {
    pub rule: StoppingRule,
    pub thetas: Vec<f64>,
    /// `E |u(τ+ϑ) − u(τ)|_{U'}` per lag.
    pub increments: Vec<Estimate>,
    pub mean_tau: f64,
    pub fit: Option<LineFit>,
    pub fitted_b: Option<f64>,
    /// `C` in `C ϑ^b`.
    pub fitted_c: Option<f64>,
    /// Set when some mean increment is zero or non-finite.
    pub degenerate: bool,
    pub blowups: usize,
}

fn increment_norm(grid: &SpectralGrid, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    grid.norm_of(&d, NormKind::U_DUAL)
}

/// Lags must be increasing, at least four, and fit inside `(0, T/2)`.
pub fn validate_thetas(thetas: &[f64], horizon: f64) -> Result<(), EstimatorError> {
    if thetas.len() < 4 {
        return Err(EstimatorError::InvalidThetas(format!(
            "need at least 4 lags, got {}",
            thetas.len()
        )));
    }
    if thetas.iter().any(|&t| !(t > 0.0 && t < 0.5 * horizon)) {
        return Err(EstimatorError::InvalidThetas(format!(
            "every lag must lie in (0, {})",
            0.5 * horizon
        )));
    }
    if thetas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EstimatorError::InvalidThetas("lags must be strictly increasing".into()));
    }
    Ok(())
}

pub fn aldous_check(
    run: &Run,
    n_traj: usize,
    thetas: &[f64],
    rule: StoppingRule,
) -> Result<AldousReport, EstimatorError> {
    if n_traj < 2 {
        return Err(EstimatorError::TooFewTrajectories {
            required: 2,
            got: n_traj,
        });
    }
    let horizon = run.config.horizon;
    validate_thetas(thetas, horizon)?;
    let cap = horizon - thetas.last().unwrap();
    let grid = &run.system.grid;
    let results = map_ensemble(run, n_traj, |_, r| match r {
        Ok(traj) => {
            let tau = rule.stopping_time(&traj, cap);
            let base = &traj.state_at(tau).coeffs;
            let incs: Vec<f64> = thetas
                .iter()
                .map(|th| increment_norm(grid, &traj.state_at(tau + th).coeffs, base))
                .collect();
            Ok(Some((tau, incs)))
        }
        Err(SolverError::BlowUp(_)) => Ok(None),
        Err(e) => Err(EstimatorError::from(e)),
    });
    let mut per_lag = vec![Vec::with_capacity(n_traj); thetas.len()];
    let mut taus = Vec::with_capacity(n_traj);
    let mut blowups = 0;
    for r in results {
        match r? {
            Some((tau, incs)) => {
                taus.push(tau);
                for (l, v) in incs.into_iter().enumerate() {
                    per_lag[l].push(v);
                }
            }
            None => blowups += 1,
        }
    }
    check_blowups(run.m(), blowups, n_traj)?;
    let increments: Vec<Estimate> = per_lag.iter().map(|v| Estimate::from_samples(v)).collect();
    let degenerate = increments.iter().any(|e| !(e.mean > 0.0 && e.mean.is_finite()));
    let fit = if degenerate {
        None
    } else {
        let x: Vec<f64> = thetas.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = increments.iter().map(|e| e.mean.ln()).collect();
        fit_line(&x, &y, 0.95)
    };
    Ok(AldousReport {
        rule,
        thetas: thetas.to_vec(),
        mean_tau: Estimate::from_samples(&taus).mean,
        fitted_b: fit.map(|f| f.slope),
        fitted_c: fit.map(|f| f.intercept.exp()),
        fit,
        increments,
        degenerate,
        blowups,
    })
}
