//! Periodic Fourier-Galerkin discretization.
//!
//! States are stored as real coefficients against the orthonormal Fourier
//! basis of `L²(x1, x2)`:
//!
//! ```text
//! index 0      e_0    = 1 / sqrt(L)
//! index 2j-1   e_2j-1 = sqrt(2/L) cos(k_j (x - x1))
//! index 2j     e_2j   = sqrt(2/L) sin(k_j (x - x1))      j = 1..=m
//! ```
//!
//! with `L = x2 - x1` and `k_j = 2 pi j / L`. The H inner product is then the
//! Euclidean dot product of coefficient vectors.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("invalid domain: x2 ({x2}) must be greater than x1 ({x1})")]
    InvalidDomain { x1: f64, x2: f64 },
    #[error("the Galerkin dimension m must be at least 1")]
    ZeroModes,
    #[error("n_phys = {n_phys} cannot dealias quadratic products for m = {m}; need at least {required}")]
    TooFewCollocationPoints { m: usize, n_phys: usize, required: usize },
    #[error("cannot project {len} coefficients onto m = {m}: at least {required} are needed")]
    ProjectionTooShort { len: usize, m: usize, required: usize },
    #[error("coefficient vector has length {len}; expected {expected}")]
    DimensionMismatch { len: usize, expected: usize },
    #[error("coefficient vector length {0} is not of the form 2m+1 with m >= 1")]
    InvalidStateLength(usize),
    #[error("unsupported derivative order {0}; only 1 and 3 are available")]
    UnsupportedOrder(u32),
    #[error("non-finite coefficient {value} at index {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("dual Sobolev order must be positive and finite, got {0}")]
    InvalidDualOrder(f64),
    #[error("physical sample vector has length {len}; the grid has {n_phys} points")]
    PhysicalLength { len: usize, n_phys: usize },
    #[error("invalid cutoff profile: {0}")]
    InvalidCutoff(String),
    #[error("invalid initial condition: {0}")]
    InvalidInitial(String),
}

/// Number of real coefficients for Galerkin dimension `m`.
pub const fn n_coeffs(m: usize) -> usize {
    2 * m + 1
}

/// Smallest collocation count for which `u * u_x` is computed without aliasing.
pub const fn min_dealiased_points(m: usize) -> usize {
    3 * m + 1
}

/// Fourier index `j >= 0` of the basis function stored at coefficient `idx`.
#[inline]
pub const fn mode_index(idx: usize) -> usize {
    (idx + 1) / 2
}

/// Truncated solution `u^m` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinState {
    pub coeffs: Vec<f64>,
    pub t: f64,
}

impl GalerkinState {
    pub fn new(coeffs: Vec<f64>, t: f64) -> Result<Self, SpectralError> {
        if coeffs.len() < 3 || coeffs.len().is_multiple_of(2) {
            return Err(SpectralError::InvalidStateLength(coeffs.len()));
        }
        let state = Self { coeffs, t };
        state.check_finite()?;
        Ok(state)
    }

    pub fn zeros(m: usize, t: f64) -> Self {
        Self {
            coeffs: vec![0.0; n_coeffs(m)],
            t,
        }
    }

    pub fn m(&self) -> usize {
        (self.coeffs.len() - 1) / 2
    }

    pub fn check_finite(&self) -> Result<(), SpectralError> {
        match self.coeffs.iter().position(|c| !c.is_finite()) {
            Some(index) => Err(SpectralError::NonFinite {
                index,
                value: self.coeffs[index],
            }),
            None => Ok(()),
        }
    }

    /// Squared H norm (Parseval).
    pub fn h_norm_sq(&self) -> f64 {
        dot(&self.coeffs, &self.coeffs)
    }
}

/// Which weighted l2 norm to take of a coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormKind {
    /// L² norm.
    H,
    /// First-order Sobolev norm, weight `(1 + k²)^{1/2}`.
    V,
    /// Dual Sobolev norm of order `s`, weight `(1 + k²)^{-s/2}`.
    VDual(f64),
}

impl NormKind {
    /// The dual norm used for time increments.
    pub const U_DUAL: NormKind = NormKind::VDual(3.0);

    pub fn weight(&self, k: f64) -> f64 {
        match *self {
            NormKind::H => 1.0,
            NormKind::V => (1.0 + k * k).sqrt(),
            NormKind::VDual(s) => (1.0 + k * k).powf(-0.5 * s),
        }
    }

    fn validate(&self) -> Result<(), SpectralError> {
        match *self {
            NormKind::VDual(s) if !(s > 0.0 && s.is_finite()) => Err(SpectralError::InvalidDualOrder(s)),
            _ => Ok(()),
        }
    }
}

/// How the cutoff `θ` is evaluated in the tamed nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    /// `θ(|u_x|_H / m)`, one scalar per state.
    #[default]
    Norm,
    /// `θ(|u_x(x)| / m)` evaluated at every collocation point.
    Pointwise,
    /// `θ ≡ 1`: untamed nonlinearity.
    Disabled,
}

/// Smooth cutoff `θ`: one on `[0, plateau·m]`, zero beyond `support·m`,
/// joined by a C^∞ transition built from `exp(-1/s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub m: usize,
    pub plateau: f64,
    pub support: f64,
    pub mode: CutoffMode,
}

impl CutoffSpec {
    pub fn new(m: usize, mode: CutoffMode) -> Self {
        Self {
            m,
            plateau: 0.5,
            support: 1.0,
            mode,
        }
    }

    pub fn with_profile(m: usize, plateau: f64, support: f64, mode: CutoffMode) -> Result<Self, SpectralError> {
        let spec = Self {
            m,
            plateau,
            support,
            mode,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `θ ≡ 1`.
    pub fn disabled(m: usize) -> Self {
        Self::new(m, CutoffMode::Disabled)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if self.m == 0 {
            return Err(SpectralError::ZeroModes);
        }
        // θ must equal one on [0, m/2] and vanish beyond m.
        if !(self.plateau >= 0.5 && self.plateau < self.support && self.support <= 1.0) {
            return Err(SpectralError::InvalidCutoff(format!(
                "need 0.5 <= plateau < support <= 1, got plateau = {}, support = {}",
                self.plateau, self.support
            )));
        }
        Ok(())
    }

    pub fn theta(&self, xi: f64) -> f64 {
        if self.mode == CutoffMode::Disabled {
            return 1.0;
        }
        let xi = xi.abs();
        let m = self.m as f64;
        let lo = self.plateau * m;
        let hi = self.support * m;
        if xi <= lo {
            1.0
        } else if xi >= hi {
            0.0
        } else {
            smooth_step_down((xi - lo) / (hi - lo))
        }
    }
}

fn mollifier(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

/// C^∞ map of [0,1] onto [1,0] with all derivatives vanishing at both ends.
fn smooth_step_down(s: f64) -> f64 {
    let a = mollifier(1.0 - s);
    let b = mollifier(s);
    a / (a + b)
}

/// Periodic grid on `[x1, x2]` with Galerkin dimension `m`.
#[derive(Clone)]
pub struct SpectralGrid {
    x1: f64,
    x2: f64,
    m: usize,
    n_phys: usize,
    wavenumbers: Vec<f64>,
    coeff_k: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("x1", &self.x1)
            .field("x2", &self.x2)
            .field("m", &self.m)
            .field("n_phys", &self.n_phys)
            .finish()
    }
}

impl SpectralGrid {
    /// Grid with the default collocation count: the next power of two at or
    /// above `3m + 1`.
    pub fn new(x1: f64, x2: f64, m: usize) -> Result<Self, SpectralError> {
        Self::with_points(x1, x2, m, min_dealiased_points(m).next_power_of_two())
    }

    pub fn with_points(x1: f64, x2: f64, m: usize, n_phys: usize) -> Result<Self, SpectralError> {
        if !(x1.is_finite() && x2.is_finite() && x2 > x1) {
            return Err(SpectralError::InvalidDomain { x1, x2 });
        }
        if m == 0 {
            return Err(SpectralError::ZeroModes);
        }
        let required = min_dealiased_points(m);
        if n_phys < required {
            return Err(SpectralError::TooFewCollocationPoints { m, n_phys, required });
        }
        let length = x2 - x1;
        let wavenumbers = (-(m as i64)..=m as i64).map(|j| 2.0 * PI * j as f64 / length).collect();
        let coeff_k = (0..n_coeffs(m))
            .map(|idx| 2.0 * PI * mode_index(idx) as f64 / length)
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            x1,
            x2,
            m,
            n_phys,
            wavenumbers,
            coeff_k,
            forward: planner.plan_fft_forward(n_phys),
            inverse: planner.plan_fft_inverse(n_phys),
        })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn length(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_phys(&self) -> usize {
        self.n_phys
    }

    pub fn dim(&self) -> usize {
        n_coeffs(self.m)
    }

    /// `k_j = 2πj/L` for `j = -m..=m`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Nonnegative wavenumber attached to each coefficient index.
    pub fn coeff_wavenumbers(&self) -> &[f64] {
        &self.coeff_k
    }

    pub fn collocation_points(&self) -> Vec<f64> {
        let h = self.length() / self.n_phys as f64;
        (0..self.n_phys).map(|n| self.x1 + n as f64 * h).collect()
    }

    fn check_dim(&self, coeffs: &[f64]) -> Result<(), SpectralError> {
        if coeffs.len() != self.dim() {
            return Err(SpectralError::DimensionMismatch {
                len: coeffs.len(),
                expected: self.dim(),
            });
        }
        Ok(())
    }

    pub fn workspace(&self) -> SpectralWorkspace {
        let scratch_len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        SpectralWorkspace {
            buf: vec![Complex64::new(0.0, 0.0); self.n_phys],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn norm(&self, state: &GalerkinState, kind: NormKind) -> f64 {
        self.norm_of(&state.coeffs, kind)
    }

    /// Weighted l2 norm of a raw coefficient vector.
    ///
    /// Panics on a dimension mismatch or an invalid dual order.
    pub fn norm_of(&self, coeffs: &[f64], kind: NormKind) -> f64 {
        assert_eq!(coeffs.len(), self.dim(), "coefficient length does not match grid");
        kind.validate().expect("invalid norm kind");
        match kind {
            NormKind::H => dot(coeffs, coeffs).sqrt(),
            _ => coeffs
                .iter()
                .zip(&self.coeff_k)
                .map(|(c, &k)| {
                    let w = kind.weight(k);
                    w * w * c * c
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn try_norm(&self, state: &GalerkinState, kind: NormKind) -> Result<f64, SpectralError> {
        self.check_dim(&state.coeffs)?;
        kind.validate()?;
        Ok(self.norm_of(&state.coeffs, kind))
    }

    /// `∂_x^order u` for `order ∈ {1, 3}`.
    pub fn deriv(&self, state: &GalerkinState, order: u32) -> Result<GalerkinState, SpectralError> {
        self.check_dim(&state.coeffs)?;
        let mut out = vec![0.0; self.dim()];
        self.deriv_into(&state.coeffs, order, &mut out)?;
        Ok(GalerkinState {
            coeffs: out,
            t: state.t,
        })
    }

    pub fn deriv_into(&self, u: &[f64], order: u32, out: &mut [f64]) -> Result<(), SpectralError> {
        // (c, s) pairs map as d/dx: (k s, -k c) and d³/dx³: (-k³ s, k³ c).
        let sign = match order {
            1 => 1.0,
            3 => -1.0,
            other => return Err(SpectralError::UnsupportedOrder(other)),
        };
        out[0] = 0.0;
        for j in 1..=self.m {
            let k = self.coeff_k[2 * j];
            let kp = k.powi(order as i32);
            let (c, s) = (u[2 * j - 1], u[2 * j]);
            out[2 * j - 1] = sign * kp * s;
            out[2 * j] = -sign * kp * c;
        }
        Ok(())
    }

    /// Cutoff-tamed `θ · P_m(u u_x)` with dealiased products.
    pub fn nonlinear_term(&self, state: &GalerkinState, cutoff: &CutoffSpec) -> Result<GalerkinState, SpectralError> {
        self.check_dim(&state.coeffs)?;
        state.check_finite()?;
        let mut ws = self.workspace();
        let mut out = vec![0.0; self.dim()];
        self.nonlinear_into(&state.coeffs, cutoff, &mut ws, &mut out);
        Ok(GalerkinState {
            coeffs: out,
            t: state.t,
        })
    }

    /// In-place variant of [`Self::nonlinear_term`] for hot loops.
    pub fn nonlinear_into(&self, u: &[f64], cutoff: &CutoffSpec, ws: &mut SpectralWorkspace, out: &mut [f64]) {
        let inv_m = 1.0 / cutoff.m as f64;
        let scalar_theta = match cutoff.mode {
            CutoffMode::Norm => {
                let ux_norm = u
                    .iter()
                    .zip(&self.coeff_k)
                    .map(|(c, k)| k * k * c * c)
                    .sum::<f64>()
                    .sqrt();
                cutoff.theta(ux_norm * inv_m)
            }
            CutoffMode::Disabled => 1.0,
            CutoffMode::Pointwise => 1.0,
        };
        if scalar_theta == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }

        // Load u + i u_x so that one inverse FFT yields both fields.
        let n = self.n_phys;
        let length = self.length();
        let c0 = 1.0 / length.sqrt();
        let cj = 1.0 / (2.0 * length).sqrt();
        let buf = &mut ws.buf;
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        buf[0] = Complex64::new(u[0] * c0, 0.0);
        for j in 1..=self.m {
            let k = self.coeff_k[2 * j];
            let uh = Complex64::new(u[2 * j - 1] * cj, -u[2 * j] * cj);
            buf[j] = uh * (1.0 - k);
            buf[n - j] = uh.conj() * (1.0 + k);
        }
        self.inverse.process_with_scratch(buf, &mut ws.scratch);

        match cutoff.mode {
            CutoffMode::Pointwise => {
                for b in buf.iter_mut() {
                    let th = cutoff.theta(b.im * inv_m);
                    *b = Complex64::new(th * b.re * b.im, 0.0);
                }
            }
            _ => {
                for b in buf.iter_mut() {
                    *b = Complex64::new(scalar_theta * b.re * b.im, 0.0);
                }
            }
        }
        self.forward.process_with_scratch(buf, &mut ws.scratch);
        self.unload(buf, out);
    }

    /// Coefficients from the first `m` FFT bins (already unnormalized).
    fn unload(&self, buf: &[Complex64], out: &mut [f64]) {
        let n = self.n_phys as f64;
        let length = self.length();
        let a0 = length.sqrt() / n;
        let aj = (2.0 * length).sqrt() / n;
        out[0] = buf[0].re * a0;
        for j in 1..=self.m {
            out[2 * j - 1] = buf[j].re * aj;
            out[2 * j] = -buf[j].im * aj;
        }
    }

    /// Values at the collocation points.
    pub fn to_physical(&self, state: &GalerkinState) -> Result<Vec<f64>, SpectralError> {
        self.check_dim(&state.coeffs)?;
        let mut ws = self.workspace();
        let n = self.n_phys;
        let length = self.length();
        let c0 = 1.0 / length.sqrt();
        let cj = 1.0 / (2.0 * length).sqrt();
        let u = &state.coeffs;
        ws.buf[0] = Complex64::new(u[0] * c0, 0.0);
        for j in 1..=self.m {
            let uh = Complex64::new(u[2 * j - 1] * cj, -u[2 * j] * cj);
            ws.buf[j] = uh;
            ws.buf[n - j] = uh.conj();
        }
        self.inverse.process_with_scratch(&mut ws.buf, &mut ws.scratch);
        Ok(ws.buf.iter().map(|z| z.re).collect())
    }

    /// Projection of the trigonometric interpolant of collocation samples.
    pub fn from_physical(&self, values: &[f64], t: f64) -> Result<GalerkinState, SpectralError> {
        if values.len() != self.n_phys {
            return Err(SpectralError::PhysicalLength {
                len: values.len(),
                n_phys: self.n_phys,
            });
        }
        let mut ws = self.workspace();
        for (b, &v) in ws.buf.iter_mut().zip(values) {
            *b = Complex64::new(v, 0.0);
        }
        self.forward.process_with_scratch(&mut ws.buf, &mut ws.scratch);
        let mut out = vec![0.0; self.dim()];
        self.unload(&ws.buf, &mut out);
        GalerkinState::new(out, t)
    }

    /// `P_m f` for a smooth periodic function, computed from samples on a grid
    /// fine enough that aliasing into the retained modes is negligible.
    pub fn project_function(&self, f: impl Fn(f64) -> f64) -> Result<GalerkinState, SpectralError> {
        let fine_n = (16 * self.m).max(self.n_phys).next_power_of_two();
        let fine = Self::with_points(self.x1, self.x2, self.m, fine_n)?;
        let samples: Vec<f64> = fine.collocation_points().into_iter().map(f).collect();
        fine.from_physical(&samples, 0.0)
    }

    /// Evaluate the state at an arbitrary point.
    pub fn evaluate(&self, state: &GalerkinState, x: f64) -> f64 {
        let length = self.length();
        let mut acc = state.coeffs[0] / length.sqrt();
        let s2 = (2.0 / length).sqrt();
        for j in 1..=self.m {
            let phase = self.coeff_k[2 * j] * (x - self.x1);
            acc += s2 * (state.coeffs[2 * j - 1] * phase.cos() + state.coeffs[2 * j] * phase.sin());
        }
        acc
    }

    /// `∫ u dx` over one period.
    pub fn mass(&self, state: &GalerkinState) -> f64 {
        state.coeffs[0] * self.length().sqrt()
    }
}

/// Scratch buffers for repeated transforms on one grid.
#[derive(Debug, Clone)]
pub struct SpectralWorkspace {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// `P_m` applied to a longer coefficient vector: keeps the first `2m+1` modes.
pub fn project(coeffs_full: &[f64], m: usize) -> Result<GalerkinState, SpectralError> {
    project_at(coeffs_full, m, 0.0)
}

pub fn project_at(coeffs_full: &[f64], m: usize, t: f64) -> Result<GalerkinState, SpectralError> {
    if m == 0 {
        return Err(SpectralError::ZeroModes);
    }
    let required = n_coeffs(m);
    if coeffs_full.len() < required {
        return Err(SpectralError::ProjectionTooShort {
            len: coeffs_full.len(),
            m,
            required,
        });
    }
    GalerkinState::new(coeffs_full[..required].to_vec(), t)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, m: usize) -> GalerkinState {
        let coeffs = (0..n_coeffs(m)).map(|_| rng.random_range(-1.0..1.0)).collect();
        GalerkinState::new(coeffs, 0.0).unwrap()
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(
            SpectralGrid::new(1.0, 1.0, 4),
            Err(SpectralError::InvalidDomain { .. })
        ));
        assert!(matches!(SpectralGrid::new(0.0, 1.0, 0), Err(SpectralError::ZeroModes)));
        assert_eq!(
            SpectralGrid::with_points(0.0, 1.0, 8, 17).unwrap_err(),
            SpectralError::TooFewCollocationPoints {
                m: 8,
                n_phys: 17,
                required: 25
            }
        );
    }

    #[test]
    fn wavenumbers_are_integer_multiples() {
        let grid = SpectralGrid::new(-3.0, 5.0, 6).unwrap();
        let ks = grid.wavenumbers();
        assert_eq!(ks.len(), 13);
        for (i, k) in ks.iter().enumerate() {
            let j = i as f64 - 6.0;
            assert_eq!(*k, 2.0 * PI * j / 8.0);
        }
    }

    #[test]
    fn projection_is_idempotent_and_keeps_mode_zero() {
        let v: Vec<f64> = (0..65).map(|i| (i as f64).sin()).collect();
        let once = project(&v, 16).unwrap();
        let twice = project(&once.coeffs, 16).unwrap();
        assert_eq!(once, twice);

        let mut only_zero = vec![0.0; 65];
        only_zero[0] = 2.5;
        let p = project(&only_zero, 3).unwrap();
        assert_eq!(p.coeffs[0], 2.5);
        assert!(p.coeffs[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn projection_reports_lengths() {
        let err = project(&[1.0; 5], 4).unwrap_err();
        assert_eq!(
            err,
            SpectralError::ProjectionTooShort {
                len: 5,
                m: 4,
                required: 9
            }
        );
        assert!(err.to_string().contains('5') && err.to_string().contains('9'));
    }

    #[test]
    fn projection_obeys_bessel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<f64> = (0..65).map(|_| rng.random_range(-1.0..1.0)).collect();
        let full: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let p = project(&v, 16).unwrap();
        let mut direct = 0.0;
        for c in &v[..33] {
            direct += c * c;
        }
        assert!(p.h_norm_sq().sqrt() <= full);
        assert_relative_eq!(p.h_norm_sq(), direct, max_relative = 1e-14);
    }

    #[test]
    fn derivative_of_sine() {
        let grid = SpectralGrid::new(0.0, 2.0 * PI, 8).unwrap();
        let k1 = grid.coeff_wavenumbers()[1];
        let u = grid.project_function(|x| (k1 * x).sin()).unwrap();
        let du = grid.deriv(&u, 1).unwrap();
        let d3u = grid.deriv(&u, 3).unwrap();
        for x in [0.1, 1.3, 4.0, 5.9] {
            assert!((grid.evaluate(&du, x) - k1 * (k1 * x).cos()).abs() < 1e-12);
            assert!((grid.evaluate(&d3u, x) + k1.powi(3) * (k1 * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_constant_is_zero_and_orders_are_checked() {
        let grid = SpectralGrid::new(0.0, 3.0, 5).unwrap();
        let mut c = GalerkinState::zeros(5, 0.0);
        c.coeffs[0] = 4.0;
        for order in [1, 3] {
            assert!(grid.deriv(&c, order).unwrap().coeffs.iter().all(|&x| x == 0.0));
        }
        assert_eq!(grid.deriv(&c, 2).unwrap_err(), SpectralError::UnsupportedOrder(2));
    }

    #[test]
    fn norms_of_simple_states() {
        let grid = SpectralGrid::new(0.0, 2.0 * PI, 4).unwrap();
        let zero = GalerkinState::zeros(4, 0.0);
        for kind in [NormKind::H, NormKind::V, NormKind::VDual(3.0)] {
            assert_eq!(grid.norm(&zero, kind), 0.0);
        }
        let mut one = GalerkinState::zeros(4, 0.0);
        one.coeffs[1] = 1.0;
        let k1 = grid.coeff_wavenumbers()[1];
        assert_eq!(grid.norm(&one, NormKind::H), 1.0);
        assert_relative_eq!(
            grid.norm(&one, NormKind::V),
            (1.0 + k1 * k1).sqrt(),
            max_relative = 1e-15
        );
        assert!(grid.try_norm(&one, NormKind::VDual(-1.0)).is_err());
    }

    #[test]
    fn norm_matches_direct_summation() {
        let grid = SpectralGrid::new(0.0, 7.0, 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_state(&mut rng, 12);
        let direct = u.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert_relative_eq!(grid.norm(&u, NormKind::H), direct, max_relative = 1e-12);
        assert!(grid.norm(&u, NormKind::H) <= grid.norm(&u, NormKind::V));
        assert!(grid.norm(&u, NormKind::VDual(0.5)) <= grid.norm(&u, NormKind::H));
    }

    #[test]
    fn physical_round_trip_and_parseval() {
        let grid = SpectralGrid::new(-1.0, 2.0, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_state(&mut rng, 10);
        let vals = grid.to_physical(&u).unwrap();
        let back = grid.from_physical(&vals, 0.0).unwrap();
        for (a, b) in u.coeffs.iter().zip(&back.coeffs) {
            assert!((a - b).abs() < 1e-13);
        }
        let quad: f64 = vals.iter().map(|v| v * v).sum::<f64>() * grid.length() / grid.n_phys() as f64;
        assert_relative_eq!(quad, u.h_norm_sq(), max_relative = 1e-10);
        for (x, v) in grid.collocation_points().iter().zip(&vals).step_by(7) {
            assert!((grid.evaluate(&u, *x) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn nonlinear_term_of_sine_is_half_sine_two() {
        let grid = SpectralGrid::new(0.0, 2.0 * PI, 8).unwrap();
        let u = grid.project_function(|x| 1e-3 * x.sin()).unwrap();
        let n = grid.nonlinear_term(&u, &CutoffSpec::new(8, CutoffMode::Norm)).unwrap();
        // sin x cos x = sin(2x)/2, scaled by the amplitude squared.
        let expected = grid.project_function(|x| 0.5e-6 * (2.0 * x).sin()).unwrap();
        for (a, b) in n.coeffs.iter().zip(&expected.coeffs) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn nonlinear_term_of_constant_vanishes() {
        let grid = SpectralGrid::new(0.0, 5.0, 6).unwrap();
        let mut c = GalerkinState::zeros(6, 0.0);
        c.coeffs[0] = 3.0;
        let n = grid.nonlinear_term(&c, &CutoffSpec::new(6, CutoffMode::Norm)).unwrap();
        assert!(n.coeffs.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn cutoff_switches_off_large_gradients() {
        let m = 4;
        let grid = SpectralGrid::new(0.0, 2.0 * PI, m).unwrap();
        // |u_x|_H / m = 100 > m.
        let mut u = GalerkinState::zeros(m, 0.0);
        u.coeffs[2] = 400.0;
        let n = grid.nonlinear_term(&u, &CutoffSpec::new(m, CutoffMode::Norm)).unwrap();
        assert!(n.coeffs.iter().all(|&x| x == 0.0));
        let untamed = grid.nonlinear_term(&u, &CutoffSpec::disabled(m)).unwrap();
        assert!(untamed.coeffs.iter().any(|&x| x != 0.0));
    }

    #[test]
    fn cutoff_profile_conditions() {
        let c = CutoffSpec::new(10, CutoffMode::Norm);
        assert_eq!(c.theta(0.0), 1.0);
        assert_eq!(c.theta(5.0), 1.0);
        assert_eq!(c.theta(10.0), 0.0);
        assert_eq!(c.theta(10.5), 0.0);
        let mut prev = 1.0;
        for i in 0..=100 {
            let th = c.theta(5.0 + 0.05 * i as f64);
            assert!((0.0..=1.0).contains(&th));
            assert!(th <= prev);
            prev = th;
        }
        assert!(CutoffSpec::with_profile(10, 0.4, 1.0, CutoffMode::Norm).is_err());
        assert!(CutoffSpec::with_profile(10, 0.6, 1.2, CutoffMode::Norm).is_err());
        assert!(CutoffSpec::with_profile(10, 0.6, 0.9, CutoffMode::Norm).is_ok());
    }

    #[test]
    fn states_reject_nan() {
        assert!(matches!(
            GalerkinState::new(vec![0.0, f64::NAN, 1.0], 0.0),
            Err(SpectralError::NonFinite { index: 1, .. })
        ));
        assert!(GalerkinState::new(vec![0.0; 4], 0.0).is_err());
    }

    #[test]
    fn pointwise_cutoff_matches_norm_mode_for_small_states() {
        let m = 8;
        let grid = SpectralGrid::new(0.0, 2.0 * PI, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut u = random_state(&mut rng, m);
        u.coeffs.iter_mut().for_each(|c| *c *= 0.01);
        let a = grid.nonlinear_term(&u, &CutoffSpec::new(m, CutoffMode::Norm)).unwrap();
        let b = grid
            .nonlinear_term(&u, &CutoffSpec::new(m, CutoffMode::Pointwise))
            .unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
