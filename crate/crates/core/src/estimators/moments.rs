//! Ensemble estimates of `E sup_t |u^m(t)|_H^{2p}` and `E ∫ |u^m|_V² dt`,
//! their uniformity over `m`, and time-step refinement checks.

use serde::{Deserialize, Serialize};

use super::stats::{fit_line, Estimate, LineFit};
use super::{check_blowups, map_ensemble, EstimatorError, Run};
use crate::solver::{sample_noise, simulate_with_noise, NoisePath, SolverConfig, SolverError};
use crate::spectral::{dot, NormKind, SpectralGrid};
use crate::trajectory::Trajectory;

/// Admissible moment orders `[1/2, 2 + ζ]`.
pub fn moment_window(zeta: f64) -> (f64, f64) {
    (0.5, 2.0 + zeta)
}

pub fn check_moment_orders(p_values: &[f64], zeta: f64) -> Result<(), EstimatorError> {
    let (lo, hi) = moment_window(zeta);
    match p_values.iter().find(|&&p| !(p >= lo && p <= hi)) {
        Some(&p) => Err(EstimatorError::InvalidMomentOrder { p, lo, hi }),
        None => Ok(()),
    }
}

/// `(sup_t |u|_H², ∫ |u|_V² dt)` along the stored path. The sup includes
/// left limits at jump times; the integral is the trapezoid rule with the
/// left limit as the right endpoint of each interval.
pub fn path_functionals(traj: &Trajectory, grid: &SpectralGrid) -> (f64, f64) {
    let left = traj.left_limits();
    let mut sup: f64 = 0.0;
    for s in &traj.states {
        sup = sup.max(dot(&s.coeffs, &s.coeffs));
    }
    for l in &left {
        sup = sup.max(dot(l, l));
    }
    let mut integral = 0.0;
    let mut prev = grid.norm_of(&traj.states[0].coeffs, NormKind::V).powi(2);
    for i in 1..traj.len() {
        let h = traj.times[i] - traj.times[i - 1];
        let right = grid.norm_of(left[i], NormKind::V).powi(2);
        integral += 0.5 * h * (prev + right);
        prev = grid.norm_of(&traj.states[i].coeffs, NormKind::V).powi(2);
    }
    (sup, integral)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentOptions {
    pub n_traj: usize,
    pub p_values: Vec<f64>,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupMoment {
    pub m: usize,
    pub p: f64,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VIntegral {
    pub m: usize,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRatio {
    pub p: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStatistics {
    pub n_traj: usize,
    pub p_values: Vec<f64>,
    pub m_values: Vec<usize>,
    pub sup_moment: Vec<SupMoment>,
    pub v_integral: Vec<VIntegral>,
    /// Per `m`: trajectories excluded after a blow-up.
    pub blowups: Vec<usize>,
    /// Per `m`: trajectories stopped at `τ_m(R)` before the horizon.
    pub stopped: Vec<usize>,
    /// Per `p`: max/min of the sup-moment means across `m`.
    pub sup_ratio: Vec<SweepRatio>,
    /// Max/min of the V-integral means across `m`.
    pub v_ratio: f64,
}

impl EnsembleStatistics {
    pub fn sup(&self, m: usize, p: f64) -> Option<&Estimate> {
        self.sup_moment
            .iter()
            .find(|s| s.m == m && s.p == p)
            .map(|s| &s.estimate)
    }

    pub fn v(&self, m: usize) -> Option<&Estimate> {
        self.v_integral.iter().find(|v| v.m == m).map(|v| &v.estimate)
    }
}

fn max_min_ratio(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi == 0.0 && lo == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

/// Per-trajectory functionals of one ensemble, blow-ups dropped.
struct Samples {
    sup_h_sq: Vec<f64>,
    v_int: Vec<f64>,
    blowups: usize,
    stopped: usize,
}

fn collect(run: &Run, n_traj: usize) -> Result<Samples, EstimatorError> {
    let grid = &run.system.grid;
    let results = map_ensemble(run, n_traj, |_, r| match r {
        Ok(traj) => {
            let stopped = traj.stopped_at.is_some_and(|t| t < run.config.horizon);
            Ok(Some((path_functionals(&traj, grid), stopped)))
        }
        Err(SolverError::BlowUp(_)) => Ok(None),
        Err(e) => Err(e),
    });
    let mut s = Samples {
        sup_h_sq: Vec::with_capacity(n_traj),
        v_int: Vec::with_capacity(n_traj),
        blowups: 0,
        stopped: 0,
    };
    for r in results {
        match r? {
            Some(((sup, v), stopped)) => {
                s.sup_h_sq.push(sup);
                s.v_int.push(v);
                s.stopped += stopped as usize;
            }
            None => s.blowups += 1,
        }
    }
    Ok(s)
}

/// Sup-moment and V-integral estimates for each run of an m-sweep.
pub fn estimate_moments(runs: &[Run], opts: &MomentOptions) -> Result<EnsembleStatistics, EstimatorError> {
    if opts.n_traj < 2 {
        return Err(EstimatorError::TooFewTrajectories {
            required: 2,
            got: opts.n_traj,
        });
    }
    check_moment_orders(&opts.p_values, opts.zeta)?;
    let mut stats = EnsembleStatistics {
        n_traj: opts.n_traj,
        p_values: opts.p_values.clone(),
        m_values: runs.iter().map(Run::m).collect(),
        sup_moment: Vec::new(),
        v_integral: Vec::new(),
        blowups: Vec::new(),
        stopped: Vec::new(),
        sup_ratio: Vec::new(),
        v_ratio: f64::NAN,
    };
    for run in runs {
        let s = collect(run, opts.n_traj)?;
        check_blowups(run.m(), s.blowups, opts.n_traj)?;
        for &p in &opts.p_values {
            let vals: Vec<f64> = s.sup_h_sq.iter().map(|x| x.powf(p)).collect();
            stats.sup_moment.push(SupMoment {
                m: run.m(),
                p,
                estimate: Estimate::from_samples(&vals),
            });
        }
        stats.v_integral.push(VIntegral {
            m: run.m(),
            estimate: Estimate::from_samples(&s.v_int),
        });
        stats.blowups.push(s.blowups);
        stats.stopped.push(s.stopped);
    }
    for &p in &opts.p_values {
        let ratio = max_min_ratio(stats.sup_moment.iter().filter(|s| s.p == p).map(|s| s.estimate.mean));
        stats.sup_ratio.push(SweepRatio { p, ratio });
    }
    stats.v_ratio = max_min_ratio(stats.v_integral.iter().map(|v| v.estimate.mean));
    Ok(stats)
}

/// Noise for `config` and the same Brownian path and jumps on a grid
/// `factor` times coarser.
fn coupled_noise(
    fine: &SolverConfig,
    run: &Run,
    index: u64,
    factor: usize,
) -> Result<(NoisePath, NoisePath), EstimatorError> {
    let fine_noise = sample_noise(fine, &run.system, index)?;
    let coarse = NoisePath {
        wiener: fine_noise
            .wiener
            .coarsen(factor)
            .map_err(|e| EstimatorError::InvalidOption(format!("cannot couple step sizes: {e}")))?,
        ..fine_noise.clone()
    };
    Ok((fine_noise, coarse))
}

fn fine_config(run: &Run, factor: usize) -> Result<SolverConfig, EstimatorError> {
    let steps = run.config.horizon / run.config.dt;
    if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
        return Err(EstimatorError::InvalidOption(format!(
            "horizon {} is not a whole number of steps {}",
            run.config.horizon, run.config.dt
        )));
    }
    Ok(SolverConfig {
        dt: run.config.dt / factor as f64,
        ..run.config.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementEntry {
    pub quantity: String,
    pub coarse: Estimate,
    pub fine: Estimate,
    /// Mean of the per-trajectory differences fine − coarse.
    pub paired_difference: Estimate,
    /// `|fine − coarse| < 2 · std_error(coarse)`.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub m: usize,
    pub dt: f64,
    pub n_pairs: usize,
    pub blowups: usize,
    pub entries: Vec<RefinementEntry>,
    pub passed: bool,
}

/// Re-runs the ensemble at `dt/2` with the same driving noise and compares
/// the moment estimates.
pub fn refinement_check(run: &Run, n_traj: usize, p_values: &[f64]) -> Result<RefinementReport, EstimatorError> {
    if n_traj < 2 {
        return Err(EstimatorError::TooFewTrajectories {
            required: 2,
            got: n_traj,
        });
    }
    let fine_cfg = fine_config(run, 2)?;
    let grid = &run.system.grid;
    let pairs: Vec<Result<Option<((f64, f64), (f64, f64))>, EstimatorError>> = {
        use rayon::prelude::*;
        (0..n_traj as u64)
            .into_par_iter()
            .map(|i| {
                let (fine_noise, coarse_noise) = coupled_noise(&fine_cfg, run, i, 2)?;
                let coarse = simulate_with_noise(&run.config, &run.system, &run.u0, &coarse_noise);
                let fine = simulate_with_noise(&fine_cfg, &run.system, &run.u0, &fine_noise);
                match (coarse, fine) {
                    (Ok(c), Ok(f)) => Ok(Some((path_functionals(&c, grid), path_functionals(&f, grid)))),
                    (Err(SolverError::BlowUp(_)), _) | (_, Err(SolverError::BlowUp(_))) => Ok(None),
                    (Err(e), _) | (_, Err(e)) => Err(e.into()),
                }
            })
            .collect()
    };
    let mut coarse = Vec::with_capacity(n_traj);
    let mut fine = Vec::with_capacity(n_traj);
    let mut blowups = 0;
    for p in pairs {
        match p? {
            Some((c, f)) => {
                coarse.push(c);
                fine.push(f);
            }
            None => blowups += 1,
        }
    }
    check_blowups(run.m(), blowups, n_traj)?;

    let mut entries = Vec::new();
    let mut push = |quantity: String, c: Vec<f64>, f: Vec<f64>| {
        let diff: Vec<f64> = f.iter().zip(&c).map(|(a, b)| a - b).collect();
        let coarse = Estimate::from_samples(&c);
        let fine = Estimate::from_samples(&f);
        entries.push(RefinementEntry {
            passed: (fine.mean - coarse.mean).abs() < 2.0 * coarse.std_error,
            quantity,
            coarse,
            fine,
            paired_difference: Estimate::from_samples(&diff),
        });
    };
    for &p in p_values {
        push(
            format!("sup_moment p={p}"),
            coarse.iter().map(|x| x.0.powf(p)).collect(),
            fine.iter().map(|x| x.0.powf(p)).collect(),
        );
    }
    push(
        "v_integral".into(),
        coarse.iter().map(|x| x.1).collect(),
        fine.iter().map(|x| x.1).collect(),
    );
    let passed = entries.iter().all(|e| e.passed);
    Ok(RefinementReport {
        m: run.m(),
        dt: run.config.dt,
        n_pairs: coarse.len(),
        blowups,
        entries,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongOrderReport {
    pub dts: Vec<f64>,
    pub reference_dt: f64,
    /// `E |u_dt(T) − u_ref(T)|_H` per step size.
    pub errors: Vec<Estimate>,
    pub fit: Option<LineFit>,
}

impl StrongOrderReport {
    pub fn order(&self) -> f64 {
        self.fit.map_or(f64::NAN, |f| f.slope)
    }
}

/// Strong error at `T` for `dt, dt/2, …, dt/2^refinements` against a
/// reference run at `dt / 2^(refinements + 3)` driven by the same noise.
pub fn strong_order_check(run: &Run, n_traj: usize, refinements: usize) -> Result<StrongOrderReport, EstimatorError> {
    if n_traj < 2 {
        return Err(EstimatorError::TooFewTrajectories {
            required: 2,
            got: n_traj,
        });
    }
    let levels = refinements + 1;
    let ref_factor = 1usize << (refinements + 3);
    let ref_cfg = fine_config(run, ref_factor)?;
    let dts: Vec<f64> = (0..levels).map(|l| run.config.dt / (1u64 << l) as f64).collect();
    let per_traj: Vec<Result<Vec<f64>, EstimatorError>> = {
        use rayon::prelude::*;
        (0..n_traj as u64)
            .into_par_iter()
            .map(|i| {
                let ref_noise = sample_noise(&ref_cfg, &run.system, i)?;
                let reference = simulate_with_noise(&ref_cfg, &run.system, &run.u0, &ref_noise)?;
                let target = &reference.final_state().coeffs;
                (0..levels)
                    .map(|l| {
                        let factor = ref_factor >> l;
                        let cfg = SolverConfig {
                            dt: dts[l],
                            ..run.config.clone()
                        };
                        let noise = NoisePath {
                            wiener: ref_noise
                                .wiener
                                .coarsen(factor)
                                .map_err(|e| EstimatorError::InvalidOption(e.to_string()))?,
                            ..ref_noise.clone()
                        };
                        let tr = simulate_with_noise(&cfg, &run.system, &run.u0, &noise)?;
                        let d: Vec<f64> = tr.final_state().coeffs.iter().zip(target).map(|(a, b)| a - b).collect();
                        Ok(dot(&d, &d).sqrt())
                    })
                    .collect()
            })
            .collect()
    };
    let mut errs = vec![Vec::with_capacity(n_traj); levels];
    for r in per_traj {
        for (l, e) in r?.into_iter().enumerate() {
            errs[l].push(e);
        }
    }
    let errors: Vec<Estimate> = errs.iter().map(|e| Estimate::from_samples(e)).collect();
    let x: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.mean.ln()).collect();
    Ok(StrongOrderReport {
        reference_dt: ref_cfg.dt,
        fit: fit_line(&x, &y, 0.95),
        dts,
        errors,
    })
}
