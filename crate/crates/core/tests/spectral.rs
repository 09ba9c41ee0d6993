use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skdv_core::estimators::NeumaierSum;
use skdv_core::spectral::{dot, n_coeffs, project, CutoffMode, CutoffSpec, GalerkinState, NormKind, SpectralGrid};

fn random_state(rng: &mut impl Rng, m: usize) -> GalerkinState {
    let coeffs = (0..n_coeffs(m)).map(|_| rng.random_range(-1.0..1.0)).collect();
    GalerkinState::new(coeffs, 0.0).unwrap()
}

/// Derivative of order `n` of the real Fourier series, summed term by term.
fn series_derivative(x1: f64, length: f64, coeffs: &[f64], n: u32, x: f64) -> f64 {
    let m = (coeffs.len() - 1) / 2;
    let s2 = (2.0 / length).sqrt();
    let mut acc = if n == 0 { coeffs[0] / length.sqrt() } else { 0.0 };
    for j in 1..=m {
        let k = 2.0 * PI * j as f64 / length;
        let ph = k * (x - x1);
        // d^n/dx^n cos(kx) = k^n cos(kx + nπ/2), likewise for sin.
        let shift = n as f64 * PI / 2.0;
        let kn = k.powi(n as i32);
        acc += s2 * kn * (coeffs[2 * j - 1] * (ph + shift).cos() + coeffs[2 * j] * (ph + shift).sin());
    }
    acc
}

#[test]
fn derivatives_are_exact_on_band_limited_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let grid = SpectralGrid::new(-3.0, 7.0, 64).unwrap();
    for _ in 0..20 {
        let u = random_state(&mut rng, 64);
        for order in [1, 3] {
            let d = grid.deriv(&u, order).unwrap();
            let xs: Vec<f64> = (0..37).map(|i| -3.0 + 10.0 * i as f64 / 37.0 + 0.013).collect();
            let exact: Vec<f64> = xs
                .iter()
                .map(|&x| series_derivative(-3.0, 10.0, &u.coeffs, order, x))
                .collect();
            let scale = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (x, e) in xs.iter().zip(&exact) {
                let got = grid.evaluate(&d, *x);
                assert!((got - e).abs() <= 1e-10 * scale, "order {order} x {x}: {got} vs {e}");
            }
        }
    }
}

/// Compensated inner product; plain summation of `2m+1` products of size
/// `k³` leaves round-off above the tolerance at m = 64.
fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).collect::<NeumaierSum>().value()
}

#[test]
fn dispersion_and_nonlinearity_are_skew_at_m64() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 64).unwrap();
    let cutoff = CutoffSpec::disabled(64);
    for _ in 0..100 {
        let u = random_state(&mut rng, 64);
        let u3 = grid.deriv(&u, 3).unwrap();
        let d = inner(&u3.coeffs, &u.coeffs);
        assert!(d.abs() < 1e-10, "<u_3x, u> = {d}");
        let n = grid.nonlinear_term(&u, &cutoff).unwrap();
        let s = inner(&n.coeffs, &u.coeffs);
        assert!(s.abs() < 1e-10, "<P(uu_x), u> = {s}");
    }
}

#[test]
fn nonlinear_term_matches_direct_quadrature() {
    // u u_x computed pointwise on a fine grid and projected; the dealiased
    // product is exact, so both agree to round-off.
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let grid = SpectralGrid::new(0.0, 5.0, 6).unwrap();
    let u = random_state(&mut rng, 6);
    let n = grid.nonlinear_term(&u, &CutoffSpec::disabled(6)).unwrap();
    let c = u.coeffs.clone();
    let direct = grid
        .project_function(|x| series_derivative(0.0, 5.0, &c, 0, x) * series_derivative(0.0, 5.0, &c, 1, x))
        .unwrap();
    for (a, b) in n.coeffs.iter().zip(&direct.coeffs) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn norm_cutoff_switches_off_large_gradients() {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 4).unwrap();
    let cutoff = CutoffSpec::new(4, CutoffMode::Norm);
    let mut u = GalerkinState::zeros(4, 0.0);
    u.coeffs[8] = 1e3;
    let n = grid.nonlinear_term(&u, &cutoff).unwrap();
    assert!(n.coeffs.iter().all(|c| *c == 0.0));
}

fn coeffs_strategy(max_m: usize) -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1..=max_m).prop_flat_map(|m| (Just(m), prop::collection::vec(-10.0f64..10.0, n_coeffs(m))))
}

proptest! {
    #[test]
    fn projection_is_an_h_contraction((m, c) in coeffs_strategy(16), keep in 1usize..16) {
        let keep = keep.min(m);
        let full = GalerkinState::new(c.clone(), 0.0).unwrap();
        let p = project(&c, keep).unwrap();
        prop_assert!(p.h_norm_sq() <= full.h_norm_sq() + 1e-12);
        prop_assert_eq!(project(&p.coeffs, keep).unwrap(), p);
    }

    #[test]
    fn physical_round_trip_is_identity((m, c) in coeffs_strategy(12), x1 in -5.0f64..5.0, len in 0.5f64..20.0) {
        let grid = SpectralGrid::new(x1, x1 + len, m).unwrap();
        let u = GalerkinState::new(c, 0.0).unwrap();
        let back = grid.from_physical(&grid.to_physical(&u).unwrap(), 0.0).unwrap();
        for (a, b) in u.coeffs.iter().zip(&back.coeffs) {
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn skew_symmetry_holds_for_any_state((m, c) in coeffs_strategy(20), len in 1.0f64..30.0) {
        let grid = SpectralGrid::new(0.0, len, m).unwrap();
        let u = GalerkinState::new(c, 0.0).unwrap();
        let n = grid.nonlinear_term(&u, &CutoffSpec::disabled(m)).unwrap();
        let scale = grid.norm(&u, NormKind::H).powi(2) * grid.norm(&grid.deriv(&u, 1).unwrap(), NormKind::H);
        prop_assert!(dot(&n.coeffs, &u.coeffs).abs() <= 1e-12 * (1.0 + scale));
        let u3 = grid.deriv(&u, 3).unwrap();
        prop_assert!(dot(&u3.coeffs, &u.coeffs).abs() <= 1e-12 * (1.0 + dot(&u3.coeffs, &u3.coeffs).sqrt() * u.h_norm_sq().sqrt()));
    }

    #[test]
    fn norms_are_ordered((m, c) in coeffs_strategy(12)) {
        let grid = SpectralGrid::new(0.0, 2.0 * PI, m).unwrap();
        let u = GalerkinState::new(c, 0.0).unwrap();
        let dual = grid.norm(&u, NormKind::U_DUAL);
        let h = grid.norm(&u, NormKind::H);
        let v = grid.norm(&u, NormKind::V);
        prop_assert!(dual <= h * (1.0 + 1e-12) && h <= v * (1.0 + 1e-12));
    }
}
