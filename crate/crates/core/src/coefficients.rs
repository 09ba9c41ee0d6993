//! Jump coefficients `F`, diffusion coefficients `Φ`, and sampling-based
//! falsification checks for the growth and Lipschitz hypotheses they are
//! declared to satisfy.
//!
//! Continuity hypotheses are not checked: sampling cannot falsify them.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::IntensityMeasure;
use crate::rng;
use crate::spectral::{dot, mode_index, CutoffSpec, GalerkinState, NormKind, SpectralError, SpectralGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoefficientError {
    #[error("λ must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("constant {name} must be finite and nonnegative, got {value}")]
    InvalidConstant { name: String, value: f64 },
    #[error("growth constant for order p = {0} is not declared")]
    MissingGrowthOrder(f64),
    #[error("at least one sample is required")]
    ZeroSamples,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// `F(t, u; y)` in Galerkin coordinates.
pub trait JumpCoefficient: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Writes `P_m F(t, u; y)` into `out` (same length as `u`).
    fn eval_into(&self, t: f64, u: &[f64], mark: f64, out: &mut [f64]);

    fn is_zero(&self) -> bool {
        false
    }

    /// Closed-form `C_q` with `∫|F|^q dν ≤ C_q (1 + |u|^q)`, if available.
    fn growth_bound(&self, _nu: &IntensityMeasure, _q: f64) -> Option<f64> {
        None
    }

    /// Closed-form `L` with `∫|F(u1) − F(u2)|² dν ≤ L |u1 − u2|²`, if available.
    fn lipschitz_bound(&self, _nu: &IntensityMeasure) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroJump;

impl JumpCoefficient for ZeroJump {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn eval_into(&self, _t: f64, _u: &[f64], _mark: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
    }

    fn is_zero(&self) -> bool {
        true
    }

    fn growth_bound(&self, _nu: &IntensityMeasure, _q: f64) -> Option<f64> {
        Some(0.0)
    }

    fn lipschitz_bound(&self, _nu: &IntensityMeasure) -> Option<f64> {
        Some(0.0)
    }
}

/// `F(t, u; y) = y · φ0` for a fixed profile `φ0`.
#[derive(Debug, Clone)]
pub struct AdditiveJump {
    pub profile: Vec<f64>,
}

impl AdditiveJump {
    fn profile_norm(&self) -> f64 {
        dot(&self.profile, &self.profile).sqrt()
    }
}

impl JumpCoefficient for AdditiveJump {
    fn name(&self) -> &'static str {
        "additive"
    }

    fn eval_into(&self, _t: f64, _u: &[f64], mark: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = mark * self.profile.get(i).copied().unwrap_or(0.0);
        }
    }

    fn growth_bound(&self, nu: &IntensityMeasure, q: f64) -> Option<f64> {
        let a = self.profile_norm();
        Some(nu.atoms().map(|(y, r)| r * (y.abs() * a).powf(q)).sum())
    }

    fn lipschitz_bound(&self, _nu: &IntensityMeasure) -> Option<f64> {
        Some(0.0)
    }
}

/// `F(t, u; y) = y · ρ(|u|_H) · u` with `ρ(r) = min(1, R0 / r)`.
#[derive(Debug, Clone, Copy)]
pub struct BoundedMultiplicativeJump {
    pub radius: f64,
}

/// Radial damping `min(1, R0/r)`.
pub fn radial_damping(r: f64, radius: f64) -> f64 {
    if r <= radius {
        1.0
    } else {
        radius / r
    }
}

impl JumpCoefficient for BoundedMultiplicativeJump {
    fn name(&self) -> &'static str {
        "bounded_multiplicative"
    }

    fn eval_into(&self, _t: f64, u: &[f64], mark: f64, out: &mut [f64]) {
        let scale = mark * radial_damping(dot(u, u).sqrt(), self.radius);
        for (o, x) in out.iter_mut().zip(u) {
            *o = scale * x;
        }
    }

    fn growth_bound(&self, nu: &IntensityMeasure, q: f64) -> Option<f64> {
        // |F| = |y| min(|u|, R0) ≤ |y| |u|.
        Some(nu.atoms().map(|(y, r)| r * y.abs().powf(q)).sum())
    }

    fn lipschitz_bound(&self, nu: &IntensityMeasure) -> Option<f64> {
        // u ↦ ρ(|u|)u is the metric projection onto the closed R0-ball.
        Some(nu.atoms().map(|(y, r)| r * y * y).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstant {
    pub order: f64,
    pub constant: f64,
}

/// Orders at which the growth bound must be declared.
pub fn required_growth_orders(zeta: f64) -> [f64; 4] {
    [1.0, 2.0, 2.0 + 0.5 * zeta, 4.0 + zeta]
}

/// Jump coefficient together with its declared constants.
#[derive(Debug, Clone)]
pub struct LevyNoiseModel {
    pub coefficient: Arc<dyn JumpCoefficient>,
    pub lipschitz: f64,
    pub growth: Vec<GrowthConstant>,
    pub zeta: f64,
}

fn check_constant(name: &str, value: f64) -> Result<(), CoefficientError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(CoefficientError::InvalidConstant {
            name: name.to_string(),
            value,
        })
    }
}

impl LevyNoiseModel {
    pub fn new(
        coefficient: Arc<dyn JumpCoefficient>,
        lipschitz: f64,
        growth: Vec<GrowthConstant>,
        zeta: f64,
    ) -> Result<Self, CoefficientError> {
        check_constant("L", lipschitz)?;
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(CoefficientError::InvalidConstant {
                name: "zeta".into(),
                value: zeta,
            });
        }
        for g in &growth {
            check_constant(&format!("C_{}", g.order), g.constant)?;
        }
        let model = Self {
            coefficient,
            lipschitz,
            growth,
            zeta,
        };
        for q in required_growth_orders(zeta) {
            if model.growth_constant(q).is_none() {
                return Err(CoefficientError::MissingGrowthOrder(q));
            }
        }
        Ok(model)
    }

    /// Built-in coefficient with its closed-form constants declared at the
    /// required orders plus any `extra_orders`.
    pub fn with_closed_form(
        coefficient: Arc<dyn JumpCoefficient>,
        nu: &IntensityMeasure,
        zeta: f64,
        extra_orders: &[f64],
    ) -> Result<Self, CoefficientError> {
        let lipschitz = coefficient
            .lipschitz_bound(nu)
            .ok_or(CoefficientError::InvalidConstant {
                name: "L".into(),
                value: f64::NAN,
            })?;
        let mut growth = Vec::new();
        for q in required_growth_orders(zeta).iter().chain(extra_orders) {
            let constant = coefficient
                .growth_bound(nu, *q)
                .ok_or(CoefficientError::MissingGrowthOrder(*q))?;
            growth.push(GrowthConstant { order: *q, constant });
        }
        Self::new(coefficient, lipschitz, growth, zeta)
    }

    pub fn zero() -> Self {
        Self::with_closed_form(Arc::new(ZeroJump), &IntensityMeasure::empty(), 1.0, &[]).expect("zero model")
    }

    pub fn growth_constant(&self, order: f64) -> Option<f64> {
        self.growth
            .iter()
            .find(|g| (g.order - order).abs() <= 1e-12 * order.max(1.0))
            .map(|g| g.constant)
    }

    pub fn with_lipschitz(mut self, lipschitz: f64) -> Self {
        self.lipschitz = lipschitz;
        self
    }
}

/// `Φ(t, u)`: a linear map from the truncated Wiener coordinates into the
/// Galerkin space.
pub trait DiffusionCoefficient: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn n_modes(&self) -> usize;

    /// Row-major `dim × n_modes` matrix of `P_m Φ(t, u)`.
    fn matrix(&self, grid: &SpectralGrid, t: f64, u: &[f64]) -> Vec<f64>;

    /// `out += P_m Φ(t, u) dw`.
    fn apply_into(&self, grid: &SpectralGrid, t: f64, u: &[f64], dw: &[f64], out: &mut [f64]) {
        let n = self.n_modes();
        let mat = self.matrix(grid, t, u);
        for (i, o) in out.iter_mut().enumerate() {
            *o += dot(&mat[i * n..(i + 1) * n], dw);
        }
    }

    /// Squared Hilbert–Schmidt (Frobenius) norm.
    fn hs_norm_sq(&self, grid: &SpectralGrid, t: f64, u: &[f64]) -> f64 {
        let mat = self.matrix(grid, t, u);
        dot(&mat, &mat)
    }

    /// `|Φ(t, u)^* u|²`.
    fn adjoint_norm_sq(&self, grid: &SpectralGrid, t: f64, u: &[f64]) -> f64 {
        let n = self.n_modes();
        let mat = self.matrix(grid, t, u);
        (0..n)
            .map(|j| {
                let v: f64 = u.iter().enumerate().map(|(i, ui)| ui * mat[i * n + j]).sum();
                v * v
            })
            .sum()
    }
}

/// Maps Wiener coordinate `e_j` to `σ_j ρ(|u|_V) e_j` with
/// `σ_j = σ0 (1 + k_j²)^{-decay}` and `ρ(r) = min(1, R0 / r)`.
#[derive(Debug, Clone, Copy)]
pub struct DiagonalDamped {
    pub sigma0: f64,
    pub decay: f64,
    pub radius: f64,
    pub n_modes: usize,
}

impl DiagonalDamped {
    fn sigma(&self, grid: &SpectralGrid, i: usize) -> f64 {
        let k = 2.0 * std::f64::consts::PI * mode_index(i) as f64 / grid.length();
        self.sigma0 * (1.0 + k * k).powf(-self.decay)
    }

    fn damping(&self, grid: &SpectralGrid, u: &[f64]) -> f64 {
        radial_damping(grid.norm_of(u, NormKind::V), self.radius)
    }

    /// `Σ_j σ_j²` over all Wiener coordinates; bounds `‖P_m Φ‖²_HS` for every m.
    pub fn sigma_sq_sum(&self, grid: &SpectralGrid) -> f64 {
        (0..self.n_modes).map(|i| self.sigma(grid, i).powi(2)).sum()
    }
}

impl DiffusionCoefficient for DiagonalDamped {
    fn name(&self) -> &'static str {
        "diagonal_damped"
    }

    fn n_modes(&self) -> usize {
        self.n_modes
    }

    fn matrix(&self, grid: &SpectralGrid, _t: f64, u: &[f64]) -> Vec<f64> {
        let n = self.n_modes;
        let rho = self.damping(grid, u);
        let mut mat = vec![0.0; u.len() * n];
        for i in 0..u.len().min(n) {
            mat[i * n + i] = self.sigma(grid, i) * rho;
        }
        mat
    }

    fn apply_into(&self, grid: &SpectralGrid, _t: f64, u: &[f64], dw: &[f64], out: &mut [f64]) {
        let rho = self.damping(grid, u);
        for (i, o) in out.iter_mut().enumerate().take(self.n_modes) {
            *o += self.sigma(grid, i) * rho * dw[i];
        }
    }

    fn hs_norm_sq(&self, grid: &SpectralGrid, _t: f64, u: &[f64]) -> f64 {
        let rho = self.damping(grid, u);
        (0..u.len().min(self.n_modes))
            .map(|i| (self.sigma(grid, i) * rho).powi(2))
            .sum()
    }

    fn adjoint_norm_sq(&self, grid: &SpectralGrid, _t: f64, u: &[f64]) -> f64 {
        let rho = self.damping(grid, u);
        (0..u.len().min(self.n_modes))
            .map(|i| (self.sigma(grid, i) * rho * u[i]).powi(2))
            .sum()
    }
}

/// Constants of the coercivity inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coercivity {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub struct DiffusionModel {
    pub coefficient: Arc<dyn DiffusionCoefficient>,
    pub l_phi: f64,
    pub c_phi: f64,
    pub coercivity: Coercivity,
}

impl DiffusionModel {
    pub fn new(
        coefficient: Arc<dyn DiffusionCoefficient>,
        l_phi: f64,
        c_phi: f64,
        coercivity: Coercivity,
    ) -> Result<Self, CoefficientError> {
        check_constant("L_Phi", l_phi)?;
        check_constant("C_Phi", c_phi)?;
        check_constant("alpha", coercivity.alpha)?;
        check_constant("beta", coercivity.beta)?;
        check_constant("kappa", coercivity.kappa)?;
        Ok(Self {
            coefficient,
            l_phi,
            c_phi,
            coercivity,
        })
    }

    /// Diagonal damped model with `L_Φ = S / R0²` and `C_Φ = S`, where
    /// `S = Σ σ_j²`.
    pub fn diagonal_damped(
        coefficient: DiagonalDamped,
        grid: &SpectralGrid,
        coercivity: Coercivity,
    ) -> Result<Self, CoefficientError> {
        check_constant("sigma0", coefficient.sigma0)?;
        if !(coefficient.radius > 0.0) {
            return Err(CoefficientError::InvalidConstant {
                name: "radius".into(),
                value: coefficient.radius,
            });
        }
        let s = coefficient.sigma_sq_sum(grid);
        Self::new(Arc::new(coefficient), s / coefficient.radius.powi(2), s, coercivity)
    }

    pub fn n_modes(&self) -> usize {
        self.coefficient.n_modes()
    }
}

/// `K_λ u = u_xxx + λ P_m(u u_x)` with the untamed product.
pub fn k_lambda(grid: &SpectralGrid, state: &GalerkinState, lambda: f64) -> Result<GalerkinState, CoefficientError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(CoefficientError::InvalidLambda(lambda));
    }
    let mut out = grid.deriv(state, 3)?;
    if lambda != 0.0 {
        let nl = grid.nonlinear_term(state, &CutoffSpec::disabled(grid.m()))?;
        for (o, n) in out.coeffs.iter_mut().zip(&nl.coeffs) {
            *o += lambda * n;
        }
    }
    Ok(out)
}

/// Random Galerkin states with smooth spectra and H norm uniform in
/// `[0, max_radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSampler {
    pub max_radius: f64,
    /// Coefficient envelope `(1 + k²)^{-decay/2}`.
    pub decay: f64,
    pub seed: u64,
}

impl Default for StateSampler {
    fn default() -> Self {
        Self {
            max_radius: 5.0,
            decay: 1.0,
            seed: 0,
        }
    }
}

impl StateSampler {
    fn direction<R: Rng>(&self, grid: &SpectralGrid, rng: &mut R) -> Vec<f64> {
        let mut v: Vec<f64> = grid
            .coeff_wavenumbers()
            .iter()
            .map(|k| {
                let z: f64 = StandardNormal.sample(rng);
                z * (1.0 + k * k).powf(-0.5 * self.decay)
            })
            .collect();
        let n = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    pub fn sample<R: Rng>(&self, grid: &SpectralGrid, rng: &mut R) -> Vec<f64> {
        let r = self.max_radius * rng.random::<f64>();
        let mut v = self.direction(grid, rng);
        v.iter_mut().for_each(|x| *x *= r);
        v
    }

    /// Pair `(u1, u2)` whose separation is log-uniform over three decades.
    pub fn sample_pair<R: Rng>(&self, grid: &SpectralGrid, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let u1 = self.sample(grid, rng);
        let sep = self.max_radius * 10f64.powf(-3.0 * rng.random::<f64>());
        let d = self.direction(grid, rng);
        let u2 = u1.iter().zip(&d).map(|(a, b)| a + sep * b).collect();
        (u1, u2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Largest observed ratio lhs / rhs-factor; must not exceed the threshold.
    MaxRatio,
    /// Smallest observed lhs − rhs; must be nonnegative.
    MinMargin,
    /// Largest ν-mass of marks producing a null jump; must be zero.
    NullJumpMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub kind: CheckKind,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityRange {
    /// Smallest sampled `|u|_V` at which the coercivity bound failed, if any.
    pub first_failure_v_norm: Option<f64>,
    /// Largest sampled `|u|_V` below which every sample satisfied the bound.
    pub holds_up_to_v_norm: f64,
    pub max_sampled_v_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub model: String,
    pub n_samples: usize,
    pub checks: Vec<HypothesisCheck>,
    pub coercivity_range: Option<CoercivityRange>,
    pub passed: bool,
}

/// Model under validation.
#[derive(Debug, Clone, Copy)]
pub enum ModelRef<'a> {
    Jump(&'a LevyNoiseModel, &'a IntensityMeasure),
    Diffusion(&'a DiffusionModel),
}

const RATIO_SLACK: f64 = 1e-9;

fn ratio_check(name: String, statistic: f64, threshold: f64) -> HypothesisCheck {
    HypothesisCheck {
        passed: statistic <= threshold * (1.0 + RATIO_SLACK) + 1e-300,
        name,
        kind: CheckKind::MaxRatio,
        statistic,
        threshold,
    }
}

/// Spot-check the declared constants on `n_samples` sampled states. A pass
/// means no counterexample was found.
pub fn validate_hypotheses(
    model: ModelRef<'_>,
    grid: &SpectralGrid,
    sampler: &StateSampler,
    n_samples: usize,
) -> Result<ValidationReport, CoefficientError> {
    if n_samples == 0 {
        return Err(CoefficientError::ZeroSamples);
    }
    let mut rng = rng::stream(sampler.seed, 0, rng::StreamPurpose::Sampler);
    let (name, checks, coercivity_range) = match model {
        ModelRef::Jump(m, nu) => (
            m.coefficient.name().to_string(),
            validate_jump(m, nu, grid, sampler, n_samples, &mut rng),
            None,
        ),
        ModelRef::Diffusion(m) => {
            let (checks, range) = validate_diffusion(m, grid, sampler, n_samples, &mut rng)?;
            (m.coefficient.name().to_string(), checks, Some(range))
        }
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        model: name,
        n_samples,
        checks,
        coercivity_range,
        passed,
    })
}

fn validate_jump<R: Rng>(
    model: &LevyNoiseModel,
    nu: &IntensityMeasure,
    grid: &SpectralGrid,
    sampler: &StateSampler,
    n_samples: usize,
    rng: &mut R,
) -> Vec<HypothesisCheck> {
    let dim = grid.dim();
    let coef = &model.coefficient;
    let mut f1 = vec![0.0; dim];
    let mut f2 = vec![0.0; dim];
    let mut null_mass: f64 = 0.0;
    let mut lip_ratio: f64 = 0.0;
    let mut growth_ratio = vec![0.0f64; model.growth.len()];
    for _ in 0..n_samples {
        let (u1, u2) = sampler.sample_pair(grid, rng);
        let mut diff_sq = 0.0;
        let mut mass = 0.0;
        let mut moments = vec![0.0; model.growth.len()];
        for (y, rate) in nu.atoms() {
            coef.eval_into(0.0, &u1, y, &mut f1);
            coef.eval_into(0.0, &u2, y, &mut f2);
            let n1 = dot(&f1, &f1).sqrt();
            if n1 == 0.0 {
                mass += rate;
            }
            diff_sq += rate * f1.iter().zip(&f2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            for (acc, g) in moments.iter_mut().zip(&model.growth) {
                *acc += rate * n1.powf(g.order);
            }
        }
        null_mass = null_mass.max(mass);
        let du: f64 = u1.iter().zip(&u2).map(|(a, b)| (a - b) * (a - b)).sum();
        if du > 0.0 {
            lip_ratio = lip_ratio.max(diff_sq / du);
        }
        let un = dot(&u1, &u1).sqrt();
        for ((r, acc), g) in growth_ratio.iter_mut().zip(&moments).zip(&model.growth) {
            *r = r.max(acc / (1.0 + un.powf(g.order)));
        }
    }
    // A coefficient that vanishes identically is the same as no jump noise.
    let f1_ok = null_mass == 0.0 || coef.is_zero();
    let mut checks = vec![
        HypothesisCheck {
            name: "F1 null jumps".into(),
            kind: CheckKind::NullJumpMass,
            statistic: null_mass,
            threshold: 0.0,
            passed: f1_ok,
        },
        ratio_check("F2 Lipschitz".into(), lip_ratio, model.lipschitz),
    ];
    for (g, r) in model.growth.iter().zip(growth_ratio) {
        checks.push(ratio_check(format!("F3 growth p={}", g.order), r, g.constant));
    }
    checks
}

fn validate_diffusion<R: Rng>(
    model: &DiffusionModel,
    grid: &SpectralGrid,
    sampler: &StateSampler,
    n_samples: usize,
    rng: &mut R,
) -> Result<(Vec<HypothesisCheck>, CoercivityRange), CoefficientError> {
    let coef = &model.coefficient;
    let Coercivity { alpha, beta, kappa } = model.coercivity;
    let mut lip_ratio: f64 = 0.0;
    let mut growth_ratio: f64 = 0.0;
    let mut margins = [f64::INFINITY; 2];
    let mut coercive_samples: Vec<(f64, bool)> = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let (u1, u2) = sampler.sample_pair(grid, rng);
        let m1 = coef.matrix(grid, 0.0, &u1);
        let m2 = coef.matrix(grid, 0.0, &u2);
        let hs_diff: f64 = m1.iter().zip(&m2).map(|(a, b)| (a - b) * (a - b)).sum();
        let dv: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
        let dv_norm = grid.norm_of(&dv, NormKind::V);
        if dv_norm > 0.0 {
            lip_ratio = lip_ratio.max(hs_diff / (dv_norm * dv_norm));
        }

        let hs = dot(&m1, &m1);
        let h = grid.norm_of(&u1, NormKind::H);
        let v = grid.norm_of(&u1, NormKind::V);
        growth_ratio = growth_ratio.max(hs / (v.max(h) + 1.0));

        let state = GalerkinState { coeffs: u1, t: 0.0 };
        let rhs = alpha * v * v - beta * h - kappa;
        let mut all_ok = true;
        for (slot, lambda) in [0.0, 1.0].into_iter().enumerate() {
            let ku = k_lambda(grid, &state, lambda)?;
            let lhs = (2.0 * dot(&ku.coeffs, &state.coeffs) - hs).min(-hs);
            let margin = lhs - rhs;
            margins[slot] = margins[slot].min(margin);
            let tol = 1e-9 * (hs + rhs.abs() + 1.0);
            all_ok &= margin >= -tol;
        }
        coercive_samples.push((v, all_ok));
    }

    coercive_samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first_failure = coercive_samples.iter().find(|s| !s.1).map(|s| s.0);
    let holds_up_to = coercive_samples
        .iter()
        .take_while(|s| s.1)
        .last()
        .map(|s| s.0)
        .unwrap_or(0.0);
    let max_sampled = coercive_samples.last().map(|s| s.0).unwrap_or(0.0);

    let mut checks = vec![
        ratio_check("Phi1 Lipschitz".into(), lip_ratio, model.l_phi),
        ratio_check("Phi3 growth".into(), growth_ratio, model.c_phi),
    ];
    for (slot, lambda) in [0, 1].into_iter().enumerate() {
        let statistic = margins[slot];
        checks.push(HypothesisCheck {
            name: format!("Phi2 coercivity lambda={lambda}"),
            kind: CheckKind::MinMargin,
            statistic,
            threshold: 0.0,
            passed: first_failure.is_none(),
        });
    }
    Ok((
        checks,
        CoercivityRange {
            first_failure_v_norm: first_failure,
            holds_up_to_v_norm: holds_up_to,
            max_sampled_v_norm: max_sampled,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(0.0, 2.0 * PI, 8).unwrap()
    }

    fn nu() -> IntensityMeasure {
        IntensityMeasure::new(vec![-0.2, 0.3], vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn k_lambda_rejects_out_of_range() {
        let g = grid();
        let u = GalerkinState::zeros(8, 0.0);
        assert_eq!(k_lambda(&g, &u, 1.5).unwrap_err(), CoefficientError::InvalidLambda(1.5));
        assert!(k_lambda(&g, &u, -0.1).is_err());
    }

    #[test]
    fn k_lambda_zero_is_third_derivative_and_constants_vanish() {
        let g = grid();
        let u = g.project_function(|x| x.sin() + 0.3 * (2.0 * x).cos()).unwrap();
        assert_eq!(k_lambda(&g, &u, 0.0).unwrap(), g.deriv(&u, 3).unwrap());
        let mut c = GalerkinState::zeros(8, 0.0);
        c.coeffs[0] = 2.0;
        assert!(k_lambda(&g, &c, 1.0).unwrap().coeffs.iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn zero_model_passes_with_any_constants() {
        let g = grid();
        let zero = LevyNoiseModel::zero();
        let n = nu();
        let report = validate_hypotheses(ModelRef::Jump(&zero, &n), &g, &StateSampler::default(), 50).unwrap();
        assert!(report.passed);
        for c in report.checks.iter().filter(|c| c.kind == CheckKind::MaxRatio) {
            assert_eq!(c.statistic, 0.0);
        }
    }

    #[test]
    fn bounded_multiplicative_passes_with_closed_form_constants() {
        let g = grid();
        let n = nu();
        let model = LevyNoiseModel::with_closed_form(Arc::new(BoundedMultiplicativeJump { radius: 2.0 }), &n, 1.0, &[])
            .unwrap();
        let sampler = StateSampler {
            max_radius: 6.0,
            decay: 1.0,
            seed: 3,
        };
        let report = validate_hypotheses(ModelRef::Jump(&model, &n), &g, &sampler, 1000).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn understated_lipschitz_constant_is_caught() {
        let g = grid();
        let n = nu();
        // Radius far outside the sampled range: F is linear in u.
        let model = LevyNoiseModel::with_closed_form(Arc::new(BoundedMultiplicativeJump { radius: 1e6 }), &n, 1.0, &[])
            .unwrap();
        let true_l = model.lipschitz;
        let model = model.with_lipschitz(true_l / 10.0);
        let report = validate_hypotheses(ModelRef::Jump(&model, &n), &g, &StateSampler::default(), 20).unwrap();
        assert!(!report.passed);
        let f2 = report.checks.iter().find(|c| c.name.starts_with("F2")).unwrap();
        assert!(!f2.passed);
        assert!((f2.statistic - true_l).abs() < 1e-9 * true_l);
    }

    #[test]
    fn missing_growth_order_is_rejected() {
        let err = LevyNoiseModel::new(
            Arc::new(ZeroJump),
            0.0,
            vec![GrowthConstant {
                order: 1.0,
                constant: 0.0,
            }],
            1.0,
        )
        .unwrap_err();
        assert_eq!(err, CoefficientError::MissingGrowthOrder(2.0));
    }

    #[test]
    fn additive_jump_has_zero_lipschitz_constant() {
        let n = nu();
        let model = LevyNoiseModel::with_closed_form(
            Arc::new(AdditiveJump {
                profile: vec![0.0, 1.0, 0.5],
            }),
            &n,
            1.0,
            &[],
        )
        .unwrap();
        assert_eq!(model.lipschitz, 0.0);
        let g = grid();
        let report = validate_hypotheses(ModelRef::Jump(&model, &n), &g, &StateSampler::default(), 100).unwrap();
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn diagonal_damped_matrix_route_agrees_with_fast_route() {
        let g = grid();
        let d = DiagonalDamped {
            sigma0: 0.7,
            decay: 1.0,
            radius: 1.5,
            n_modes: 13,
        };
        let sampler = StateSampler::default();
        let mut r = rng::from_seed(1);
        let u = sampler.sample(&g, &mut r);
        let mat = d.matrix(&g, 0.0, &u);
        assert!((dot(&mat, &mat) - d.hs_norm_sq(&g, 0.0, &u)).abs() < 1e-14);
        let dw: Vec<f64> = (0..13).map(|i| (i as f64).cos()).collect();
        let mut fast = vec![0.0; g.dim()];
        d.apply_into(&g, 0.0, &u, &dw, &mut fast);
        let n = 13;
        for (i, f) in fast.iter().enumerate() {
            let slow = dot(&mat[i * n..(i + 1) * n], &dw);
            assert!((f - slow).abs() < 1e-14);
        }
        let adj: f64 = (0..n)
            .map(|j| (0..g.dim()).map(|i| u[i] * mat[i * n + j]).sum::<f64>().powi(2))
            .sum();
        assert!((adj - d.adjoint_norm_sq(&g, 0.0, &u)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_damped_constants_hold_and_coercivity_range_is_reported() {
        let g = grid();
        let d = DiagonalDamped {
            sigma0: 0.5,
            decay: 1.0,
            radius: 2.0,
            n_modes: g.dim(),
        };
        let s = d.sigma_sq_sum(&g);
        let model = DiffusionModel::diagonal_damped(
            d,
            &g,
            Coercivity {
                alpha: 0.01,
                beta: 1.0,
                kappa: s + 1.0,
            },
        )
        .unwrap();
        let sampler = StateSampler {
            max_radius: 3.0,
            decay: 1.0,
            seed: 2,
        };
        let report = validate_hypotheses(ModelRef::Diffusion(&model), &g, &sampler, 500).unwrap();
        for c in &report.checks {
            if c.name.starts_with("Phi1") || c.name.starts_with("Phi3") {
                assert!(c.passed, "{c:?}");
            }
        }
        let range = report.coercivity_range.unwrap();
        assert!(range.holds_up_to_v_norm > 0.0);

        // A large state range must expose the coercivity failure.
        let wide = StateSampler {
            max_radius: 200.0,
            ..sampler
        };
        let report = validate_hypotheses(ModelRef::Diffusion(&model), &g, &wide, 500).unwrap();
        let range = report.coercivity_range.unwrap();
        assert!(range.first_failure_v_norm.is_some());
        assert!(!report.passed);
    }
}
