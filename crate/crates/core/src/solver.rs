//! Time stepping for the Galerkin system
//!
//! `du + (u_xxx + θ P_m(u u_x)) dt = P_m Φ(u) dW + ∫ P_m F(u−; y) η̃(dt, dy)`
//!
//! on a grid that merges uniform steps with the sampled jump times. Between
//! jumps the path is advanced by one of the [`Scheme`]s against the Wiener
//! increment of the sub-interval; at a jump time the jump is added to the
//! left limit. The compensator `−Σ ν_j F(u; y_j)` is part of the drift.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::{DiffusionCoefficient, JumpCoefficient, ZeroJump};
use crate::noise::{sample_prm_with, IntensityMeasure, JumpEvent, NoiseError, WienerPath};
use crate::rng::{self, StreamPurpose};
use crate::spectral::{
    dot, CutoffMode, CutoffSpec, GalerkinState, NormKind, SpectralError, SpectralGrid, SpectralWorkspace,
};
use crate::trajectory::{JumpRecord, Trajectory};

/// Stopping radius multiplier applied to `max(|u0|_H, 1)` when none is set.
pub const DEFAULT_STOPPING_FACTOR: f64 = 1e3;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e12;

/// Integrators for the continuous part. All treat `u_xxx` without a step
/// size restriction; the explicit nonlinear term needs
/// `dt · max|k| · max|u| ≲ 1`, which the cutoff caps at `dt · max|k| · m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Exact linear propagator, explicit Euler drift, Euler–Maruyama noise:
    /// `u ← E(h)(u + h N(u) + Φ(u) ΔW)`.
    #[default]
    ExponentialEuler,
    /// Fourth-order Runge–Kutta in integrating-factor form for the drift,
    /// Euler–Maruyama noise transported by `E(h)`.
    ExponentialRk4,
    /// Crank–Nicolson for `u_xxx`, explicit drift and noise.
    SemiImplicitCn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub horizon: f64,
    pub m: usize,
    /// `R` in `τ_m(R)`; `None` means `1e3 · max(|u0|_H, 1)`.
    pub stopping_radius: Option<f64>,
    pub blowup_threshold: f64,
    pub scheme: Scheme,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(dt: f64, horizon: f64, m: usize) -> Self {
        Self {
            dt,
            horizon,
            m,
            stopping_radius: None,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            scheme: Scheme::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |key: &str, msg: &str| Err(SolverError::InvalidConfig(format!("{key}: {msg}")));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be positive and finite");
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return bad("horizon", "must be nonnegative and finite");
        }
        if self.m == 0 {
            return bad("m", "must be at least 1");
        }
        if let Some(r) = self.stopping_radius {
            if !(r > 0.0) {
                return bad("stopping_radius", "must be positive");
            }
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blowup_threshold", "must be positive");
        }
        Ok(())
    }

    pub fn stopping_radius_for(&self, u0: &GalerkinState) -> f64 {
        self.stopping_radius
            .unwrap_or_else(|| DEFAULT_STOPPING_FACTOR * u0.h_norm_sq().sqrt().max(1.0))
    }

    /// Uniform nodes `0, dt, 2dt, …, T`; the last step may be short.
    pub fn uniform_nodes(&self) -> Vec<f64> {
        if self.horizon == 0.0 {
            return vec![0.0];
        }
        let n = ((self.horizon / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * self.dt).collect();
        nodes.push(self.horizon);
        nodes
    }
}

/// Diagnostics of a detected blow-up.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowUp {
    /// End of the step that produced the bad state.
    pub time: f64,
    pub last_finite_state: GalerkinState,
    pub h_norm: f64,
    pub v_norm: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("solver m = {config} does not match grid m = {grid}")]
    GridMismatch { config: usize, grid: usize },
    #[error("noise path does not match the run: {0}")]
    NoiseMismatch(String),
    #[error(
        "numerical blow-up at t = {:e}; last finite state has |u|_H = {:e}, |u|_V = {:e}",
        .0.time, .0.h_norm, .0.v_norm
    )]
    BlowUp(Box<BlowUp>),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Drift, noise coefficients and intensity measure of one Galerkin system.
#[derive(Debug, Clone)]
pub struct GalerkinSystem {
    pub grid: SpectralGrid,
    pub cutoff: CutoffSpec,
    pub nu: IntensityMeasure,
    pub jump: Arc<dyn JumpCoefficient>,
    pub diffusion: Option<Arc<dyn DiffusionCoefficient>>,
}

impl GalerkinSystem {
    /// Noise-free system with the default norm cutoff.
    pub fn deterministic(grid: SpectralGrid) -> Self {
        let cutoff = CutoffSpec::new(grid.m(), CutoffMode::Norm);
        Self {
            grid,
            cutoff,
            nu: IntensityMeasure::empty(),
            jump: Arc::new(ZeroJump),
            diffusion: None,
        }
    }

    pub fn with_cutoff(mut self, cutoff: CutoffSpec) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn with_jumps(mut self, jump: Arc<dyn JumpCoefficient>, nu: IntensityMeasure) -> Self {
        self.jump = jump;
        self.nu = nu;
        self
    }

    pub fn with_diffusion(mut self, diffusion: Arc<dyn DiffusionCoefficient>) -> Self {
        self.diffusion = Some(diffusion);
        self
    }

    pub fn n_wiener_modes(&self) -> usize {
        self.diffusion.as_ref().map_or(0, |d| d.n_modes())
    }

    fn drift_into(&self, t: f64, u: &[f64], ws: &mut SpectralWorkspace, fbuf: &mut [f64], out: &mut [f64]) {
        self.grid.nonlinear_into(u, &self.cutoff, ws, out);
        out.iter_mut().for_each(|o| *o = -*o);
        if self.jump.is_zero() {
            return;
        }
        for (y, rate) in self.nu.atoms() {
            if rate == 0.0 {
                continue;
            }
            self.jump.eval_into(t, u, y, fbuf);
            for (o, f) in out.iter_mut().zip(fbuf.iter()) {
                *o -= rate * f;
            }
        }
    }

    /// `N(t, u) = −θ P_m(u u_x) − Σ ν_j P_m F(t, u; y_j)`, the drift without
    /// the dispersive term.
    pub fn drift(&self, state: &GalerkinState) -> Result<GalerkinState, SpectralError> {
        self.check_state(state)?;
        let mut ws = self.grid.workspace();
        let mut fbuf = vec![0.0; self.grid.dim()];
        let mut out = vec![0.0; self.grid.dim()];
        self.drift_into(state.t, &state.coeffs, &mut ws, &mut fbuf, &mut out);
        Ok(GalerkinState {
            coeffs: out,
            t: state.t,
        })
    }

    fn check_state(&self, state: &GalerkinState) -> Result<(), SpectralError> {
        if state.coeffs.len() != self.grid.dim() {
            return Err(SpectralError::DimensionMismatch {
                len: state.coeffs.len(),
                expected: self.grid.dim(),
            });
        }
        state.check_finite()
    }
}

/// `exp(−h ∂³)`: a rotation of each (cos, sin) pair by `k³ h`.
#[derive(Debug, Clone)]
struct Propagator {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Propagator {
    fn new(grid: &SpectralGrid, h: f64) -> Self {
        let k = grid.coeff_wavenumbers();
        let (cos, sin) = (1..=grid.m())
            .map(|j| {
                let w = k[2 * j].powi(3) * h;
                (w.cos(), w.sin())
            })
            .unzip();
        Self { cos, sin }
    }

    fn apply(&self, u: &mut [f64]) {
        for (j, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (a, b) = (u[2 * j + 1], u[2 * j + 2]);
            u[2 * j + 1] = c * a + s * b;
            u[2 * j + 2] = -s * a + c * b;
        }
    }
}

/// Reusable buffers for advancing one path.
pub struct Stepper<'a> {
    system: &'a GalerkinSystem,
    scheme: Scheme,
    /// Step the cached propagators were built for.
    h: f64,
    full: Propagator,
    half: Propagator,
    ws: SpectralWorkspace,
    fbuf: Vec<f64>,
    noise: Vec<f64>,
    k: [Vec<f64>; 4],
    au: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(system: &'a GalerkinSystem, scheme: Scheme, dt: f64) -> Self {
        let dim = system.grid.dim();
        Self {
            system,
            scheme,
            h: dt,
            full: Propagator::new(&system.grid, dt),
            half: Propagator::new(&system.grid, 0.5 * dt),
            ws: system.grid.workspace(),
            fbuf: vec![0.0; dim],
            noise: vec![0.0; dim],
            k: std::array::from_fn(|_| vec![0.0; dim]),
            au: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `u` from `t` to `t + h` with Wiener increment `dw`.
    pub fn advance(&mut self, t: f64, h: f64, u: &mut [f64], dw: &[f64]) {
        if h != self.h {
            self.full = Propagator::new(&self.system.grid, h);
            self.half = Propagator::new(&self.system.grid, 0.5 * h);
            self.h = h;
        }
        let Self {
            system,
            full,
            half,
            ws,
            fbuf,
            noise,
            k,
            au,
            tmp,
            ..
        } = self;
        let system = *system;

        noise.iter_mut().for_each(|x| *x = 0.0);
        if let Some(d) = &system.diffusion {
            if !dw.is_empty() {
                d.apply_into(&system.grid, t, u, dw, noise);
            }
        }
        let [k1, k2, k3, k4] = k;

        match self.scheme {
            Scheme::ExponentialEuler => {
                system.drift_into(t, u, ws, fbuf, k1);
                for ((x, k), n) in u.iter_mut().zip(k1.iter()).zip(noise.iter()) {
                    *x += h * k + n;
                }
                full.apply(u);
            }
            Scheme::ExponentialRk4 => {
                system.drift_into(t, u, ws, fbuf, k1);

                for (x, (a, k)) in tmp.iter_mut().zip(u.iter().zip(k1.iter())) {
                    *x = a + 0.5 * h * k;
                }
                half.apply(tmp);
                system.drift_into(t + 0.5 * h, tmp, ws, fbuf, k2);

                au.copy_from_slice(u);
                half.apply(au);
                for (x, (a, k)) in tmp.iter_mut().zip(au.iter().zip(k2.iter())) {
                    *x = a + 0.5 * h * k;
                }
                system.drift_into(t + 0.5 * h, tmp, ws, fbuf, k3);

                // E(h) u + h E(h/2) k3
                au.copy_from_slice(k3);
                half.apply(au);
                tmp.copy_from_slice(u);
                full.apply(tmp);
                for (x, a) in tmp.iter_mut().zip(au.iter()) {
                    *x += h * a;
                }
                system.drift_into(t + h, tmp, ws, fbuf, k4);

                // E(h)(u + h/6 k1 + ΔN) + h/6 (2 E(h/2)(k2 + k3) + k4)
                for i in 0..u.len() {
                    u[i] += h / 6.0 * k1[i] + noise[i];
                    au[i] = k2[i] + k3[i];
                }
                full.apply(u);
                half.apply(au);
                for i in 0..u.len() {
                    u[i] += h / 6.0 * (2.0 * au[i] + k4[i]);
                }
            }
            Scheme::SemiImplicitCn => {
                system.drift_into(t, u, ws, fbuf, k1);
                let kw = system.grid.coeff_wavenumbers();
                u[0] += h * k1[0] + noise[0];
                for j in 1..=system.grid.m() {
                    let a = 0.5 * h * kw[2 * j].powi(3);
                    let (ic, is) = (2 * j - 1, 2 * j);
                    // (I + h/2 ∂³)⁻¹ [(I − h/2 ∂³) u + h N + ΔN]
                    let (c, s) = (u[ic], u[is]);
                    let rc = c + a * s + h * k1[ic] + noise[ic];
                    let rs = s - a * c + h * k1[is] + noise[is];
                    let inv = 1.0 / (1.0 + a * a);
                    u[ic] = inv * (rc + a * rs);
                    u[is] = inv * (rs - a * rc);
                }
            }
        }
    }
}

/// One step of length `dt_eff` with no jump inside.
pub fn step(
    system: &GalerkinSystem,
    scheme: Scheme,
    state: &GalerkinState,
    dt_eff: f64,
    wiener_increment: &[f64],
) -> Result<GalerkinState, SolverError> {
    system.check_state(state)?;
    if !(dt_eff > 0.0 && dt_eff.is_finite()) {
        return Err(SolverError::InvalidConfig(format!(
            "dt_eff: must be positive, got {dt_eff}"
        )));
    }
    if !wiener_increment.is_empty() && wiener_increment.len() != system.n_wiener_modes() {
        return Err(SolverError::NoiseMismatch(format!(
            "increment has {} modes, diffusion has {}",
            wiener_increment.len(),
            system.n_wiener_modes()
        )));
    }
    let mut u = state.coeffs.clone();
    Stepper::new(system, scheme, dt_eff).advance(state.t, dt_eff, &mut u, wiener_increment);
    let t = state.t + dt_eff;
    check_health(system, &u, t, &state.coeffs, DEFAULT_BLOWUP_THRESHOLD)?;
    Ok(GalerkinState { coeffs: u, t })
}

/// `u(t) = u(t−) + P_m F(t, u(t−); y)`.
pub fn apply_jump(system: &GalerkinSystem, state: &GalerkinState, event: &JumpEvent) -> GalerkinState {
    let mut out = state.clone();
    add_jump(system, event, &state.coeffs, &mut out.coeffs);
    out.t = event.t;
    out
}

fn add_jump(system: &GalerkinSystem, event: &JumpEvent, left: &[f64], out: &mut [f64]) {
    if system.jump.is_zero() {
        return;
    }
    let mut f = vec![0.0; left.len()];
    system
        .jump
        .eval_into(event.t, left, system.nu.marks()[event.mark_index], &mut f);
    for (o, v) in out.iter_mut().zip(&f) {
        *o += v;
    }
}

fn check_health(system: &GalerkinSystem, u: &[f64], t: f64, last: &[f64], threshold: f64) -> Result<(), SolverError> {
    let h = dot(u, u).sqrt();
    if h.is_finite() && h <= threshold {
        return Ok(());
    }
    Err(SolverError::BlowUp(Box::new(BlowUp {
        time: t,
        h_norm: dot(last, last).sqrt(),
        v_norm: system.grid.norm_of(last, NormKind::V),
        last_finite_state: GalerkinState {
            coeffs: last.to_vec(),
            t,
        },
    })))
}

/// Sampled driving noise of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub events: Vec<JumpEvent>,
    /// One increment per uniform step (the last one may be short).
    pub wiener: WienerPath,
    pub master_seed: u64,
    pub trajectory: u64,
}

/// Draws the jump events and Wiener increments for trajectory `index`.
pub fn sample_noise(config: &SolverConfig, system: &GalerkinSystem, index: u64) -> Result<NoisePath, SolverError> {
    config.validate()?;
    let events = if config.horizon > 0.0 && !system.nu.is_empty() {
        let mut rng = rng::stream(config.seed, index, StreamPurpose::Jumps);
        sample_prm_with(&system.nu, config.horizon, &mut rng)?
    } else {
        Vec::new()
    };
    let n_modes = system.n_wiener_modes();
    let nodes = config.uniform_nodes();
    let mut rng = rng::stream(config.seed, index, StreamPurpose::Wiener);
    let mut increments = Vec::with_capacity(n_modes * (nodes.len() - 1));
    for w in nodes.windows(2) {
        let sd = (w[1] - w[0]).sqrt();
        for _ in 0..n_modes {
            let z: f64 = StandardNormal.sample(&mut rng);
            increments.push(sd * z);
        }
    }
    Ok(NoisePath {
        events,
        wiener: WienerPath {
            n_modes,
            dt: config.dt,
            increments,
        },
        master_seed: config.seed,
        trajectory: index,
    })
}

/// Samples noise for trajectory `index` and runs it.
pub fn simulate(
    config: &SolverConfig,
    system: &GalerkinSystem,
    u0: &GalerkinState,
    index: u64,
) -> Result<Trajectory, SolverError> {
    let noise = sample_noise(config, system, index)?;
    simulate_with_noise(config, system, u0, &noise)
}

/// Runs a given noise path. The Wiener path must live on the uniform grid
/// of `config`; increments over sub-intervals cut by jumps are filled in by
/// a Brownian bridge.
pub fn simulate_with_noise(
    config: &SolverConfig,
    system: &GalerkinSystem,
    u0: &GalerkinState,
    noise: &NoisePath,
) -> Result<Trajectory, SolverError> {
    config.validate()?;
    if config.m != system.grid.m() {
        return Err(SolverError::GridMismatch {
            config: config.m,
            grid: system.grid.m(),
        });
    }
    system.check_state(u0)?;
    let nodes = config.uniform_nodes();
    let n_modes = system.n_wiener_modes();
    if noise.wiener.n_modes != n_modes {
        return Err(SolverError::NoiseMismatch(format!(
            "Wiener path has {} modes, diffusion has {n_modes}",
            noise.wiener.n_modes
        )));
    }
    if n_modes > 0 && noise.wiener.n_steps() != nodes.len() - 1 {
        return Err(SolverError::NoiseMismatch(format!(
            "Wiener path has {} steps, the grid has {}",
            noise.wiener.n_steps(),
            nodes.len() - 1
        )));
    }
    if let Some(e) = noise
        .events
        .iter()
        .find(|e| !(e.t > 0.0 && e.t <= config.horizon) || e.mark_index >= system.nu.len())
    {
        return Err(SolverError::NoiseMismatch(format!("jump event {e:?} outside the run")));
    }

    let radius = config.stopping_radius_for(u0);
    let mut traj = Trajectory::new(u0.clone());
    if u0.h_norm_sq().sqrt() >= radius {
        traj.stopped_at = Some(u0.t);
        return Ok(traj);
    }

    let mut stepper = Stepper::new(system, config.scheme, config.dt);
    let mut bridge = rng::stream(noise.master_seed, noise.trajectory, StreamPurpose::Bridge);
    let mut u = u0.coeffs.clone();
    let mut last = u.clone();
    let mut remaining = vec![0.0; n_modes];
    let mut dw = vec![0.0; n_modes];
    let mut next_event = 0;
    let crossed = |v: &[f64]| dot(v, v).sqrt() >= radius;

    for (n, w) in nodes.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if n_modes > 0 {
            remaining.copy_from_slice(noise.wiener.step(n));
        }
        let mut t = a;
        loop {
            let jump_here = next_event < noise.events.len() && noise.events[next_event].t <= b;
            let target = if jump_here { noise.events[next_event].t } else { b };
            let s = target - t;
            if s > 0.0 {
                let r = b - t;
                if target == b {
                    dw.copy_from_slice(&remaining);
                } else {
                    let sd = (s * (r - s) / r).sqrt();
                    for (d, rem) in dw.iter_mut().zip(remaining.iter_mut()) {
                        let z: f64 = StandardNormal.sample(&mut bridge);
                        *d = s / r * *rem + sd * z;
                        *rem -= *d;
                    }
                }
                last.copy_from_slice(&u);
                stepper.advance(t, s, &mut u, &dw);
                check_health(system, &u, target, &last, config.blowup_threshold)?;
                t = target;
                traj.push(&u, t, &dw);
                if crossed(&u) {
                    traj.stopped_at = Some(t);
                    return Ok(traj);
                }
            } else if !jump_here {
                break;
            }
            if !jump_here {
                break;
            }
            while next_event < noise.events.len() && noise.events[next_event].t == target {
                let event = noise.events[next_event];
                last.copy_from_slice(&u);
                add_jump(system, &event, &last, &mut u);
                check_health(system, &u, t, &last, config.blowup_threshold)?;
                traj.jump_log.push(JumpRecord {
                    t,
                    mark_index: event.mark_index,
                    mark: system.nu.marks()[event.mark_index],
                    left: last.clone(),
                });
                next_event += 1;
            }
            traj.replace_last(&u);
            if crossed(&u) {
                traj.stopped_at = Some(t);
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}
