//! Stored càdlàg paths and their text and binary encodings.
//!
//! Binary layout (all little-endian):
//!
//! | bytes | content                                  |
//! |-------|------------------------------------------|
//! | 8     | magic `SKDVTRJ\0`                        |
//! | 4     | format version (u32, currently 1)        |
//! | 4     | m (u32)                                  |
//! | 8     | number of frames (u64)                   |
//! | ...   | frames: `t` then `2m+1` coefficients, f64 |

use std::fmt::Write as _;
use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{n_coeffs, GalerkinState};

pub const BINARY_MAGIC: &[u8; 8] = b"SKDVTRJ\0";
pub const BINARY_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a trajectory file (bad magic)")]
    BadMagic,
    #[error("unsupported trajectory format version {0}")]
    UnsupportedVersion(u32),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// A jump applied at time `t`: the event, its mark value, and the left limit
/// `u(t−)` of the path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub t: f64,
    pub mark_index: usize,
    pub mark: f64,
    pub left: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub m: usize,
    /// Uniform grid nodes merged with jump times; strictly increasing.
    pub times: Vec<f64>,
    /// `u(t)` at every stored time; post-jump values at jump times.
    pub states: Vec<GalerkinState>,
    /// Wiener increment over `(times[i-1], times[i]]`; entry 0 is empty.
    pub increments: Vec<Vec<f64>>,
    pub stopped_at: Option<f64>,
    pub jump_log: Vec<JumpRecord>,
}

impl Trajectory {
    pub fn new(u0: GalerkinState) -> Self {
        Self {
            m: u0.m(),
            times: vec![u0.t],
            states: vec![u0],
            increments: vec![Vec::new()],
            stopped_at: None,
            jump_log: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &GalerkinState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &GalerkinState {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub(crate) fn push(&mut self, coeffs: &[f64], t: f64, dw: &[f64]) {
        self.times.push(t);
        self.states.push(GalerkinState {
            coeffs: coeffs.to_vec(),
            t,
        });
        self.increments.push(dw.to_vec());
    }

    /// Overwrites the most recent state, used when several jumps share a time.
    pub(crate) fn replace_last(&mut self, coeffs: &[f64]) {
        let last = self.states.last_mut().expect("nonempty");
        last.coeffs.copy_from_slice(coeffs);
    }

    /// `u(t_i−)` for every stored time: the logged left limit at jump times,
    /// the stored state elsewhere.
    pub fn left_limits(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.states.iter().map(|s| s.coeffs.as_slice()).collect();
        let mut i = 0;
        let mut prev_t = f64::NAN;
        for rec in &self.jump_log {
            if rec.t == prev_t {
                continue;
            }
            prev_t = rec.t;
            while i < self.times.len() && self.times[i] < rec.t {
                i += 1;
            }
            if i < self.times.len() && self.times[i] == rec.t {
                out[i] = &rec.left;
            }
        }
        out
    }

    /// Index of the last stored time `≤ t`.
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Right-continuous piecewise-constant reading of the stored path.
    pub fn state_at(&self, t: f64) -> &GalerkinState {
        &self.states[self.index_at(t)]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# skdv trajectory v1\n");
        let stopped = self.stopped_at.map_or_else(|| "none".to_string(), |t| format!("{t:e}"));
        let _ = writeln!(out, "# m {} n_times {} stopped_at {}", self.m, self.len(), stopped);
        out.push_str("# t");
        for i in 0..n_coeffs(self.m) {
            let _ = write!(out, " c{i}");
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:e}");
            for c in &s.coeffs {
                let _ = write!(out, " {c:e}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the columnar text back into `(times, coefficient rows)`.
    pub fn frames_from_text(text: &str) -> Result<(usize, Vec<f64>, Vec<Vec<f64>>), TrajectoryError> {
        let mut m = None;
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: &str| TrajectoryError::Parse {
                line: i + 1,
                message: message.to_string(),
            };
            if let Some(rest) = line.strip_prefix("# m ") {
                let v = rest.split_whitespace().next().ok_or_else(|| err("missing m"))?;
                m = Some(v.parse::<usize>().map_err(|_| err("bad m"))?);
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let m = m.ok_or_else(|| err("data before header"))?;
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let vals = vals.map_err(|_| err("bad number"))?;
            if vals.len() != n_coeffs(m) + 1 {
                return Err(err("wrong number of columns"));
            }
            times.push(vals[0]);
            rows.push(vals[1..].to_vec());
        }
        let m = m.ok_or(TrajectoryError::Parse {
            line: 0,
            message: "missing header".into(),
        })?;
        Ok((m, times, rows))
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), TrajectoryError> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&BINARY_VERSION.to_le_bytes())?;
        w.write_all(&(self.m as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (t, s) in self.times.iter().zip(&self.states) {
            w.write_all(&t.to_le_bytes())?;
            for c in &s.coeffs {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.len() * (n_coeffs(self.m) + 1) * 8);
        self.write_binary(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Reads binary frames as states (jump log and increments are not
    /// part of the frame format).
    pub fn read_binary<R: Read>(mut r: R) -> Result<(usize, Vec<GalerkinState>), TrajectoryError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(TrajectoryError::BadMagic);
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != BINARY_VERSION {
            return Err(TrajectoryError::UnsupportedVersion(version));
        }
        r.read_exact(&mut b4)?;
        let m = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut states = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8)?;
            let t = f64::from_le_bytes(b8);
            let mut coeffs = Vec::with_capacity(n_coeffs(m));
            for _ in 0..n_coeffs(m) {
                r.read_exact(&mut b8)?;
                coeffs.push(f64::from_le_bytes(b8));
            }
            states.push(GalerkinState { coeffs, t });
        }
        Ok((m, states))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        let mut tr = Trajectory::new(GalerkinState {
            coeffs: vec![1.0, -0.5, 1e-300],
            t: 0.0,
        });
        tr.push(&[0.1, 0.2, 0.3], 0.25, &[]);
        tr.push(&[std::f64::consts::PI, -0.0, 7.0], 0.5, &[]);
        tr.stopped_at = Some(0.5);
        tr
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let tr = sample();
        let bytes = tr.to_binary();
        assert_eq!(&bytes[..8], BINARY_MAGIC);
        assert_eq!(bytes.len(), 24 + 3 * 4 * 8);
        let (m, states) = Trajectory::read_binary(bytes.as_slice()).unwrap();
        assert_eq!(m, 1);
        assert_eq!(states, tr.states);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let tr = sample();
        let (m, times, rows) = Trajectory::frames_from_text(&tr.to_text()).unwrap();
        assert_eq!(m, 1);
        assert_eq!(times, tr.times);
        for (row, s) in rows.iter().zip(&tr.states) {
            assert_eq!(row, &s.coeffs);
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = sample().to_binary();
        bytes[0] = b'X';
        assert!(matches!(
            Trajectory::read_binary(bytes.as_slice()),
            Err(TrajectoryError::BadMagic)
        ));
    }

    #[test]
    fn state_lookup_is_right_continuous() {
        let tr = sample();
        assert_eq!(tr.index_at(0.0), 0);
        assert_eq!(tr.index_at(0.24), 0);
        assert_eq!(tr.index_at(0.25), 1);
        assert_eq!(tr.index_at(9.0), 2);
    }
}
