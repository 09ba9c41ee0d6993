//! Itô bookkeeping for `A(u) = |u|_H^{2p}` along a stored path:
//!
//! `A(u(t)) = A(u0) + K(t) + M(t) + I(t) + residual(t)`
//!
//! * `K`: Wiener integral `∫ 2p|u|^{2p−2}⟨u, Φ dW⟩`, the drift term
//!   `∫ 2p|u|^{2p−2}⟨u, −u_xxx − θ P_m(u u_x)⟩ ds` and the Itô correction
//!   `∫ p|u|^{2p−2}‖Φ‖²_HS + 2p(p−1)|u|^{2p−4}|Φ* u|² ds`.
//! * `M`: compensated jump martingale `Σ_jumps ΔA − ∫ Σ_j ν_j (A(u+F_j) − A(u)) ds`.
//! * `I`: `∫ Σ_j ν_j (A(u+F_j) − A(u) − 2p|u|^{2p−2}⟨u, F_j⟩) ds`.
//!
//! Time integrals use the trapezoid rule with left limits at jump times;
//! the Wiener integral uses left endpoints.

use serde::{Deserialize, Serialize};

use super::stats::Estimate;
use super::taylor::TaylorConstants;
use super::{check_blowups, map_ensemble, EstimatorError, Run};
use crate::coefficients::LevyNoiseModel;
use crate::solver::{GalerkinSystem, SolverError};
use crate::spectral::{dot, SpectralWorkspace};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItoPaths {
    pub p: f64,
    pub times: Vec<f64>,
    /// `|u(t)|^{2p}`.
    pub a: Vec<f64>,
    pub k_wiener: Vec<f64>,
    pub k_drift: Vec<f64>,
    pub k_correction: Vec<f64>,
    pub k: Vec<f64>,
    pub m: Vec<f64>,
    pub i: Vec<f64>,
    /// `∫ |u|^{2p} ds`, used by the remainder bound.
    pub a_integral: Vec<f64>,
    pub residual: Vec<f64>,
    /// `max |residual| / max(A)` over the path.
    pub max_relative_residual: f64,
}

impl ItoPaths {
    /// Grid points where `I(t) > C7 t + C7 ∫|u|^{2p}` (up to rounding).
    pub fn remainder_bound_violations(&self, c7: f64) -> usize {
        self.times
            .iter()
            .zip(&self.i)
            .zip(&self.a_integral)
            .filter(|((t, i), ai)| {
                let bound = c7 * (*t - self.times[0]) + c7 * *ai;
                **i > bound + 1e-12 * bound.abs().max(1.0)
            })
            .count()
    }
}

/// `C7 = C1 (2 C_2 + C_{2p})`: with the growth bound
/// `∫|F|^q dν ≤ C_q (1 + |u|^q)` and (T1), the integrand of `I` is at most
/// `C7 (1 + |u|^{2p})`.
pub fn remainder_constant(model: &LevyNoiseModel, taylor: &TaylorConstants) -> Option<f64> {
    let c2 = model.growth_constant(2.0)?;
    let c2p = model.growth_constant(2.0 * taylor.p)?;
    Some(taylor.c1 * (2.0 * c2 + c2p))
}

struct Integrands<'a> {
    system: &'a GalerkinSystem,
    p: f64,
    ws: SpectralWorkspace,
    buf: Vec<f64>,
    nl: Vec<f64>,
    f: Vec<f64>,
    shifted: Vec<f64>,
}

impl<'a> Integrands<'a> {
    fn new(system: &'a GalerkinSystem, p: f64) -> Self {
        let dim = system.grid.dim();
        Self {
            system,
            p,
            ws: system.grid.workspace(),
            buf: vec![0.0; dim],
            nl: vec![0.0; dim],
            f: vec![0.0; dim],
            shifted: vec![0.0; dim],
        }
    }

    fn a(&self, u: &[f64]) -> f64 {
        dot(u, u).powf(self.p)
    }

    /// `2p |u|^{2p−2}`.
    fn grad_scale(&self, u: &[f64]) -> f64 {
        2.0 * self.p * dot(u, u).powf(self.p - 1.0)
    }

    fn drift(&mut self, u: &[f64]) -> f64 {
        let grid = &self.system.grid;
        grid.deriv_into(u, 3, &mut self.buf).expect("order 3 is supported");
        grid.nonlinear_into(u, &self.system.cutoff, &mut self.ws, &mut self.nl);
        let inner: f64 = u
            .iter()
            .zip(self.buf.iter().zip(&self.nl))
            .map(|(a, (d, n))| -a * (d + n))
            .sum();
        self.grad_scale(u) * inner
    }

    fn correction(&self, t: f64, u: &[f64]) -> f64 {
        let Some(phi) = &self.system.diffusion else {
            return 0.0;
        };
        let grid = &self.system.grid;
        let n2 = dot(u, u);
        let p = self.p;
        let mut c = p * n2.powf(p - 1.0) * phi.hs_norm_sq(grid, t, u);
        if p > 1.0 && n2 > 0.0 {
            c += 2.0 * p * (p - 1.0) * n2.powf(p - 2.0) * phi.adjoint_norm_sq(grid, t, u);
        }
        c
    }

    fn wiener(&mut self, t: f64, u: &[f64], dw: &[f64]) -> f64 {
        let Some(phi) = &self.system.diffusion else {
            return 0.0;
        };
        if dw.is_empty() {
            return 0.0;
        }
        self.buf.iter_mut().for_each(|b| *b = 0.0);
        phi.apply_into(&self.system.grid, t, u, dw, &mut self.buf);
        self.grad_scale(u) * dot(u, &self.buf)
    }

    /// `(Σ ν_j (A(u+F_j) − A(u)), Σ ν_j (A(u+F_j) − A(u) − ⟨DA(u), F_j⟩))`.
    fn jump_rates(&mut self, t: f64, u: &[f64]) -> (f64, f64) {
        if self.system.jump.is_zero() {
            return (0.0, 0.0);
        }
        let a = self.a(u);
        let g = self.grad_scale(u);
        let (mut cm, mut ci) = (0.0, 0.0);
        for (y, rate) in self.system.nu.atoms() {
            self.system.jump.eval_into(t, u, y, &mut self.f);
            for ((s, x), f) in self.shifted.iter_mut().zip(u).zip(&self.f) {
                *s = x + f;
            }
            let da = dot(&self.shifted, &self.shifted).powf(self.p) - a;
            cm += rate * da;
            ci += rate * (da - g * dot(u, &self.f));
        }
        (cm, ci)
    }
}

/// Reconstructs `K`, `M`, `I` for `p ≥ 1` along a stored trajectory.
pub fn ito_decomposition(traj: &Trajectory, system: &GalerkinSystem, p: f64) -> Result<ItoPaths, EstimatorError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(EstimatorError::InvalidMomentOrder {
            p,
            lo: 1.0,
            hi: f64::INFINITY,
        });
    }
    if traj.m != system.grid.m() {
        return Err(EstimatorError::Mismatch(format!(
            "trajectory has m = {}, model grid has m = {}",
            traj.m,
            system.grid.m()
        )));
    }
    let n_modes = system.n_wiener_modes();
    if let Some(bad) = traj
        .increments
        .iter()
        .skip(1)
        .find(|d| !d.is_empty() && d.len() != n_modes)
    {
        return Err(EstimatorError::Mismatch(format!(
            "Wiener increments have {} modes, diffusion has {n_modes}",
            bad.len()
        )));
    }
    if traj.jump_log.iter().any(|r| r.mark_index >= system.nu.len()) {
        return Err(EstimatorError::Mismatch(
            "jump mark index outside the intensity measure".into(),
        ));
    }

    let n = traj.len();
    let left = traj.left_limits();
    let mut ig = Integrands::new(system, p);
    let mut out = ItoPaths {
        p,
        times: traj.times.clone(),
        a: traj.states.iter().map(|s| ig.a(&s.coeffs)).collect(),
        k_wiener: vec![0.0; n],
        k_drift: vec![0.0; n],
        k_correction: vec![0.0; n],
        k: vec![0.0; n],
        m: vec![0.0; n],
        i: vec![0.0; n],
        a_integral: vec![0.0; n],
        residual: vec![0.0; n],
        max_relative_residual: 0.0,
    };

    let u0 = &traj.states[0].coeffs;
    let t0 = traj.times[0];
    let mut prev_drift = ig.drift(u0);
    let mut prev_corr = ig.correction(t0, u0);
    let mut prev_jump = ig.jump_rates(t0, u0);
    let mut prev_a = out.a[0];
    let mut rec = 0;
    for i in 1..n {
        let (t_prev, t) = (traj.times[i - 1], traj.times[i]);
        let h = t - t_prev;
        let up = &traj.states[i - 1].coeffs;
        let ul = left[i];

        let w = ig.wiener(t_prev, up, &traj.increments[i]);
        let d = ig.drift(ul);
        let c = ig.correction(t, ul);
        let j = ig.jump_rates(t, ul);
        let a_left = ig.a(ul);

        out.k_wiener[i] = out.k_wiener[i - 1] + w;
        out.k_drift[i] = out.k_drift[i - 1] + 0.5 * h * (prev_drift + d);
        out.k_correction[i] = out.k_correction[i - 1] + 0.5 * h * (prev_corr + c);
        out.m[i] = out.m[i - 1] - 0.5 * h * (prev_jump.0 + j.0);
        out.i[i] = out.i[i - 1] + 0.5 * h * (prev_jump.1 + j.1);
        out.a_integral[i] = out.a_integral[i - 1] + 0.5 * h * (prev_a + a_left);

        while rec < traj.jump_log.len() && traj.jump_log[rec].t <= t {
            let r = &traj.jump_log[rec];
            if r.t == t {
                let right: &[f64] = match traj.jump_log.get(rec + 1) {
                    Some(next) if next.t == t => &next.left,
                    _ => &traj.states[i].coeffs,
                };
                out.m[i] += ig.a(right) - ig.a(&r.left);
            }
            rec += 1;
        }

        let ui = &traj.states[i].coeffs;
        prev_drift = ig.drift(ui);
        prev_corr = ig.correction(t, ui);
        prev_jump = ig.jump_rates(t, ui);
        prev_a = out.a[i];
    }

    let mut max_res: f64 = 0.0;
    let a_max = out.a.iter().copied().fold(0.0, f64::max);
    for i in 0..n {
        out.k[i] = out.k_wiener[i] + out.k_drift[i] + out.k_correction[i];
        out.residual[i] = out.a[i] - out.a[0] - out.k[i] - out.m[i] - out.i[i];
        max_res = max_res.max(out.residual[i].abs());
    }
    out.max_relative_residual = if a_max > 0.0 { max_res / a_max } else { max_res };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub p: f64,
    pub n_traj: usize,
    pub blowups: usize,
    /// `M(T ∧ τ)`.
    pub jump_martingale: Estimate,
    /// Wiener part of `K` at `T ∧ τ`.
    pub wiener_integral: Estimate,
    pub jump_within_3sigma: bool,
    pub wiener_within_3sigma: bool,
    /// `E sup_t |M(t)|^p` over all trajectories and over the first half.
    pub doob: Estimate,
    pub doob_half: Estimate,
    /// `|doob − doob_half| < 2 · std_error(doob_half)`.
    pub doob_stable: bool,
    pub max_relative_residual: f64,
    /// Grid points, summed over trajectories, where `I` exceeded the
    /// remainder bound; `None` when no constant was supplied.
    pub remainder_bound_violations: Option<usize>,
}

/// Ensemble means of the martingale terms at the horizon.
pub fn martingale_check(run: &Run, n_traj: usize, p: f64, c7: Option<f64>) -> Result<MartingaleReport, EstimatorError> {
    if n_traj < 4 {
        return Err(EstimatorError::TooFewTrajectories {
            required: 4,
            got: n_traj,
        });
    }
    let results = map_ensemble(run, n_traj, |_, r| match r {
        Ok(traj) => {
            let paths = ito_decomposition(&traj, &run.system, p)?;
            let sup_m = paths.m.iter().fold(0.0f64, |s, v| s.max(v.abs())).powf(p);
            let viol = c7.map(|c| paths.remainder_bound_violations(c));
            Ok(Some((
                *paths.m.last().unwrap(),
                *paths.k_wiener.last().unwrap(),
                sup_m,
                paths.max_relative_residual,
                viol,
            )))
        }
        Err(SolverError::BlowUp(_)) => Ok(None),
        Err(e) => Err(EstimatorError::from(e)),
    });
    let mut m_t = Vec::with_capacity(n_traj);
    let mut w_t = Vec::with_capacity(n_traj);
    let mut sup = Vec::with_capacity(n_traj);
    let mut blowups = 0;
    let mut max_res: f64 = 0.0;
    let mut violations = c7.map(|_| 0usize);
    for r in results {
        match r? {
            Some((m, w, s, res, viol)) => {
                m_t.push(m);
                w_t.push(w);
                sup.push(s);
                max_res = max_res.max(res);
                if let (Some(total), Some(v)) = (violations.as_mut(), viol) {
                    *total += v;
                }
            }
            None => blowups += 1,
        }
    }
    check_blowups(run.m(), blowups, n_traj)?;
    let jump_martingale = Estimate::from_samples(&m_t);
    let wiener_integral = Estimate::from_samples(&w_t);
    let doob = Estimate::from_samples(&sup);
    let doob_half = Estimate::from_samples(&sup[..sup.len() / 2]);
    Ok(MartingaleReport {
        p,
        n_traj,
        blowups,
        jump_within_3sigma: jump_martingale.within(0.0, 3.0),
        wiener_within_3sigma: wiener_integral.within(0.0, 3.0),
        jump_martingale,
        wiener_integral,
        doob_stable: (doob.mean - doob_half.mean).abs() < 2.0 * doob_half.std_error,
        doob,
        doob_half,
        max_relative_residual: max_res,
        remainder_bound_violations: violations,
    })
}
