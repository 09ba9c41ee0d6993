//! Driving noises: a finite-activity Poisson random measure on time × marks,
//! its compensated integrals, and a truncated cylindrical Wiener process.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("marks ({marks}) and rates ({rates}) must have the same length")]
    LengthMismatch { marks: usize, rates: usize },
    #[error("rate {index} is {value}; rates must be finite and nonnegative")]
    InvalidRate { index: usize, value: f64 },
    #[error("mark {index} is not finite")]
    InvalidMark { index: usize },
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("coarsening factor {factor} does not divide {n_steps} steps")]
    Coarsen { factor: usize, n_steps: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Finite intensity measure `ν = Σ ν_i δ_{y_i}` on a real mark space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityMeasure {
    marks: Vec<f64>,
    rates: Vec<f64>,
    total_rate: f64,
}

impl IntensityMeasure {
    pub fn new(marks: Vec<f64>, rates: Vec<f64>) -> Result<Self, NoiseError> {
        if marks.len() != rates.len() {
            return Err(NoiseError::LengthMismatch {
                marks: marks.len(),
                rates: rates.len(),
            });
        }
        if let Some(index) = marks.iter().position(|y| !y.is_finite()) {
            return Err(NoiseError::InvalidMark { index });
        }
        if let Some(index) = rates.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(NoiseError::InvalidRate {
                index,
                value: rates[index],
            });
        }
        let total_rate = rates.iter().sum();
        Ok(Self {
            marks,
            rates,
            total_rate,
        })
    }

    pub fn empty() -> Self {
        Self {
            marks: Vec::new(),
            rates: Vec::new(),
            total_rate: 0.0,
        }
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn total_rate(&self) -> f64 {
        self.total_rate
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// Iterator over `(mark, rate)` atoms.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.marks.iter().copied().zip(self.rates.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub mark_index: usize,
}

/// Sample the measure on `(0, T] × Y`: a Poisson(ΛT) count, uniform times,
/// and marks drawn proportionally to their rates.
pub fn sample_prm(nu: &IntensityMeasure, horizon: f64, seed: u64) -> Result<Vec<JumpEvent>, NoiseError> {
    sample_prm_with(nu, horizon, &mut rng::from_seed(seed))
}

pub fn sample_prm_with<R: Rng + ?Sized>(
    nu: &IntensityMeasure,
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<JumpEvent>, NoiseError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(NoiseError::InvalidHorizon(horizon));
    }
    if nu.total_rate == 0.0 {
        return Ok(Vec::new());
    }
    let mean = nu.total_rate * horizon;
    let count = Poisson::new(mean).expect("positive finite Poisson mean").sample(rng) as usize;
    let picker = WeightedIndex::new(&nu.rates).expect("rates validated");
    let mut events: Vec<JumpEvent> = (0..count)
        .map(|_| {
            // Uniform on (0, T].
            let u: f64 = rng.random();
            JumpEvent {
                t: horizon * (1.0 - u),
                mark_index: picker.sample(rng),
            }
        })
        .collect();
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(events)
}

/// Values of a compensated jump integral at a set of observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatedPath {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// `t ↦ Σ_{t_i ≤ t} f(t_i, y_i) − ∫_0^t Σ_j f(s, y_j) ν_j ds` at each
/// observation time. The compensator is integrated with composite Simpson
/// on every gap between observation times.
pub fn compensated_integral<F>(
    events: &[JumpEvent],
    nu: &IntensityMeasure,
    integrand: F,
    observation_times: &[f64],
) -> CompensatedPath
where
    F: Fn(f64, usize) -> Vec<f64>,
{
    const PANELS: usize = 8;
    let dim = if nu.is_empty() { 0 } else { integrand(0.0, 0).len() };
    let compensator_rate = |s: f64| -> Vec<f64> {
        let mut acc = vec![0.0; dim];
        for (j, rate) in nu.rates.iter().enumerate() {
            if *rate == 0.0 {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(integrand(s, j)) {
                *a += rate * v;
            }
        }
        acc
    };

    let mut values = Vec::with_capacity(observation_times.len());
    let mut jumps = vec![0.0; dim];
    let mut comp = vec![0.0; dim];
    let mut next_event = 0;
    let mut t_prev = 0.0;
    for &t in observation_times {
        while next_event < events.len() && events[next_event].t <= t {
            let e = events[next_event];
            for (a, v) in jumps.iter_mut().zip(integrand(e.t, e.mark_index)) {
                *a += v;
            }
            next_event += 1;
        }
        if t > t_prev {
            let h = (t - t_prev) / (2 * PANELS) as f64;
            for i in 0..=(2 * PANELS) {
                let w = if i == 0 || i == 2 * PANELS {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let f = compensator_rate(t_prev + i as f64 * h);
                for (c, v) in comp.iter_mut().zip(f) {
                    *c += w * h / 3.0 * v;
                }
            }
            t_prev = t;
        }
        values.push(jumps.iter().zip(&comp).map(|(a, c)| a - c).collect());
    }
    CompensatedPath {
        times: observation_times.to_vec(),
        values,
    }
}

/// Increments of a cylindrical Wiener process truncated to `n_modes`
/// independent coordinates on a uniform step `dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerPath {
    pub n_modes: usize,
    pub dt: f64,
    /// Row-major `n_steps × n_modes`.
    pub increments: Vec<f64>,
}

impl WienerPath {
    pub fn n_steps(&self) -> usize {
        self.increments.len().checked_div(self.n_modes).unwrap_or(0)
    }

    pub fn step(&self, n: usize) -> &[f64] {
        &self.increments[n * self.n_modes..(n + 1) * self.n_modes]
    }

    /// Path on the step `factor · dt` driven by the same Brownian motion.
    pub fn coarsen(&self, factor: usize) -> Result<WienerPath, NoiseError> {
        let n_steps = self.n_steps();
        if factor == 0 || !n_steps.is_multiple_of(factor) {
            return Err(NoiseError::Coarsen { factor, n_steps });
        }
        let mut increments = vec![0.0; self.increments.len() / factor];
        for n in 0..n_steps {
            let dst = n / factor;
            for (k, v) in self.step(n).iter().enumerate() {
                increments[dst * self.n_modes + k] += v;
            }
        }
        Ok(WienerPath {
            n_modes: self.n_modes,
            dt: self.dt * factor as f64,
            increments,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# skdv wiener increments v1\n");
        let _ = writeln!(
            out,
            "# dt {:e} n_modes {} n_steps {}",
            self.dt,
            self.n_modes,
            self.n_steps()
        );
        for n in 0..self.n_steps() {
            let row: Vec<String> = self.step(n).iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NoiseError> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, message: &str| NoiseError::Parse {
            line: line + 1,
            message: message.to_string(),
        };
        let mut header = None;
        let mut increments = Vec::new();
        for (i, line) in &mut lines {
            if let Some(rest) = line.strip_prefix("# dt ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 5 || parts[1] != "n_modes" || parts[3] != "n_steps" {
                    return Err(parse_err(i, "malformed header"));
                }
                let dt: f64 = parts[0].parse().map_err(|_| parse_err(i, "bad dt"))?;
                let n_modes: usize = parts[2].parse().map_err(|_| parse_err(i, "bad n_modes"))?;
                let n_steps: usize = parts[4].parse().map_err(|_| parse_err(i, "bad n_steps"))?;
                header = Some((dt, n_modes, n_steps));
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (_, n_modes, _) = header.ok_or_else(|| parse_err(i, "data before header"))?;
            let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let row = row.map_err(|_| parse_err(i, "bad number"))?;
            if row.len() != n_modes {
                return Err(parse_err(i, "row length does not match n_modes"));
            }
            increments.extend(row);
        }
        let (dt, n_modes, n_steps) = header.ok_or_else(|| parse_err(0, "missing header"))?;
        if increments.len() != n_modes * n_steps {
            return Err(parse_err(0, "row count does not match n_steps"));
        }
        Ok(Self {
            n_modes,
            dt,
            increments,
        })
    }
}

pub fn sample_wiener(n_modes: usize, n_steps: usize, dt: f64, seed: u64) -> Result<WienerPath, NoiseError> {
    sample_wiener_with(n_modes, n_steps, dt, &mut rng::from_seed(seed))
}

pub fn sample_wiener_with<R: Rng + ?Sized>(
    n_modes: usize,
    n_steps: usize,
    dt: f64,
    rng: &mut R,
) -> Result<WienerPath, NoiseError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(NoiseError::InvalidStep(dt));
    }
    let sd = dt.sqrt();
    let increments = (0..n_modes * n_steps)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect();
    Ok(WienerPath {
        n_modes,
        dt,
        increments,
    })
}

pub fn events_to_text(events: &[JumpEvent]) -> String {
    let mut out = String::from("# skdv jump events v1\n# t mark_index\n");
    for e in events {
        let _ = writeln!(out, "{:e} {}", e.t, e.mark_index);
    }
    out
}

pub fn events_from_text(text: &str) -> Result<Vec<JumpEvent>, NoiseError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let err = |message: &str| NoiseError::Parse {
            line: i + 1,
            message: message.to_string(),
        };
        let mut parts = line.split_whitespace();
        let t = parts.next().ok_or_else(|| err("missing time"))?;
        let idx = parts.next().ok_or_else(|| err("missing mark index"))?;
        if parts.next().is_some() {
            return Err(err("too many columns"));
        }
        events.push(JumpEvent {
            t: t.parse().map_err(|_| err("bad time"))?,
            mark_index: idx.parse().map_err(|_| err("bad mark index"))?,
        });
    }
    Ok(events)
}
