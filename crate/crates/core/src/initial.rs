//! Initial conditions `P_m u0` and the exact soliton used as a regression
//! oracle.

use serde::{Deserialize, Serialize};

use crate::spectral::{GalerkinState, SpectralError, SpectralGrid};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// KdV soliton `3c sech²(√c/2 (x − x0))`, periodized.
    Soliton {
        speed: f64,
        center: f64,
    },
    /// `amplitude · cos(2π mode (x − x1) / L)`.
    Cosine {
        amplitude: f64,
        mode: usize,
    },
    /// Raw coefficients; missing trailing entries are zero and extra ones
    /// are dropped by the projection.
    Modes {
        coeffs: Vec<f64>,
    },
}

/// Images on each side summed when periodizing the soliton.
const SOLITON_IMAGES: i32 = 3;

/// Periodized soliton of speed `c` centred at `x0 + c t`.
pub fn soliton_profile(grid: &SpectralGrid, speed: f64, center: f64, t: f64, x: f64) -> f64 {
    let a = 0.5 * speed.sqrt();
    let length = grid.length();
    let xc = center + speed * t;
    (-SOLITON_IMAGES..=SOLITON_IMAGES)
        .map(|n| {
            let s = 1.0 / (a * (x - xc - n as f64 * length)).cosh();
            3.0 * speed * s * s
        })
        .sum()
}

impl InitialCondition {
    pub fn build(&self, grid: &SpectralGrid) -> Result<GalerkinState, SpectralError> {
        let state = match self {
            InitialCondition::Zero => GalerkinState::zeros(grid.m(), 0.0),
            InitialCondition::Constant { value } => {
                let mut u = GalerkinState::zeros(grid.m(), 0.0);
                u.coeffs[0] = value * grid.length().sqrt();
                u
            }
            InitialCondition::Soliton { speed, center } => {
                if !(*speed > 0.0 && speed.is_finite()) {
                    return Err(SpectralError::InvalidInitial(format!(
                        "soliton speed must be positive, got {speed}"
                    )));
                }
                grid.project_function(|x| soliton_profile(grid, *speed, *center, 0.0, x))?
            }
            InitialCondition::Cosine { amplitude, mode } => {
                let mut u = GalerkinState::zeros(grid.m(), 0.0);
                if *mode == 0 {
                    u.coeffs[0] = amplitude * grid.length().sqrt();
                } else if *mode <= grid.m() {
                    u.coeffs[2 * mode - 1] = amplitude * (0.5 * grid.length()).sqrt();
                }
                u
            }
            InitialCondition::Modes { coeffs } => {
                let mut u = GalerkinState::zeros(grid.m(), 0.0);
                for (dst, src) in u.coeffs.iter_mut().zip(coeffs) {
                    *dst = *src;
                }
                u
            }
        };
        state.check_finite()?;
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cosine_and_constant_evaluate_pointwise() {
        let g = SpectralGrid::new(-1.0, 2.0 * PI - 1.0, 8).unwrap();
        let u = InitialCondition::Cosine {
            amplitude: 0.7,
            mode: 3,
        }
        .build(&g)
        .unwrap();
        for x in [-0.5, 0.1, 2.0] {
            assert!((g.evaluate(&u, x) - 0.7 * (3.0 * (x + 1.0)).cos()).abs() < 1e-12);
        }
        let c = InitialCondition::Constant { value: -2.5 }.build(&g).unwrap();
        assert!((g.evaluate(&c, 1.3) + 2.5).abs() < 1e-12);
    }

    #[test]
    fn soliton_projection_matches_profile() {
        let g = SpectralGrid::new(0.0, 26.0, 64).unwrap();
        let u = InitialCondition::Soliton {
            speed: 4.0,
            center: 13.0,
        }
        .build(&g)
        .unwrap();
        for x in [10.0, 13.0, 13.4, 20.0] {
            assert!((g.evaluate(&u, x) - soliton_profile(&g, 4.0, 13.0, 0.0, x)).abs() < 1e-8);
        }
        // ∫ 3c sech²(√c x / 2) dx = 12 √c.
        assert!((g.mass(&u) - 24.0).abs() < 1e-8);
    }

    #[test]
    fn modes_are_truncated_to_the_grid() {
        let g = SpectralGrid::new(0.0, 1.0, 1).unwrap();
        let u = InitialCondition::Modes {
            coeffs: vec![1.0, 2.0, 3.0, 4.0, 5.0],
        }
        .build(&g)
        .unwrap();
        assert_eq!(u.coeffs, vec![1.0, 2.0, 3.0]);
    }
}
