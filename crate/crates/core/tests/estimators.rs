use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use skdv_core::coefficients::{AdditiveJump, BoundedMultiplicativeJump, DiagonalDamped, LevyNoiseModel};
use skdv_core::estimators::ito::remainder_constant;
use skdv_core::estimators::moments::{MomentOptions, RefinementReport};
use skdv_core::estimators::{
    aldous_check, estimate_moments, ito_decomposition, martingale_check, minimal_constants, refinement_check,
    strong_order_check, taylor_remainder_check, EstimatorError, Run, StoppingRule,
};
use skdv_core::initial::InitialCondition;
use skdv_core::noise::IntensityMeasure;
use skdv_core::solver::{simulate, GalerkinSystem, Scheme, SolverConfig};
use skdv_core::spectral::{CutoffSpec, NormKind, SpectralGrid};

fn run(system: GalerkinSystem, dt: f64, horizon: f64, scheme: Scheme, u0: InitialCondition) -> Run {
    let m = system.grid.m();
    let u0 = u0.build(&system.grid).unwrap();
    Run {
        config: SolverConfig {
            scheme,
            seed: 11,
            ..SolverConfig::new(dt, horizon, m)
        },
        system,
        u0,
    }
}

fn cosine() -> InitialCondition {
    InitialCondition::Cosine {
        amplitude: 1.0,
        mode: 1,
    }
}

fn jump_diffusion(m: usize) -> GalerkinSystem {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, m).unwrap();
    let nu = IntensityMeasure::new(vec![-0.3, 0.3], vec![1.0, 1.0]).unwrap();
    GalerkinSystem::deterministic(grid)
        .with_jumps(Arc::new(BoundedMultiplicativeJump { radius: 3.0 }), nu)
        .with_diffusion(Arc::new(DiagonalDamped {
            sigma0: 0.5,
            decay: 1.0,
            radius: 10.0,
            n_modes: 2 * m + 1,
        }))
}

#[test]
fn noise_off_moments_are_deterministic() {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 8).unwrap();
    let eps = 1e-3;
    let r = run(
        GalerkinSystem::deterministic(grid.clone()),
        0.01,
        0.5,
        Scheme::ExponentialRk4,
        InitialCondition::Cosine {
            amplitude: eps,
            mode: 1,
        },
    );
    let stats = estimate_moments(
        std::slice::from_ref(&r),
        &MomentOptions {
            n_traj: 4,
            p_values: vec![1.0, 2.0],
            zeta: 1.0,
        },
    )
    .unwrap();
    let traj = simulate(&r.config, &r.system, &r.u0, 0).unwrap();
    let sup = traj.states.iter().map(|s| s.h_norm_sq()).fold(0.0, f64::max);
    let e = stats.sup(8, 2.0).unwrap();
    assert_eq!(e.mean, sup * sup);
    assert_eq!(e.std_error, 0.0);
    assert_eq!(stats.v(8).unwrap().std_error, 0.0);
    // Nearly linear regime: |ε cos x|_V² = 2π ε² is conserved.
    let v = stats.v(8).unwrap().mean;
    assert!((v / (2.0 * PI * eps * eps * 0.5) - 1.0).abs() < 1e-3, "{v}");
}

#[test]
fn moment_orders_outside_the_window_are_rejected() {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 4).unwrap();
    let r = run(
        GalerkinSystem::deterministic(grid),
        0.1,
        0.2,
        Scheme::ExponentialEuler,
        cosine(),
    );
    let err = estimate_moments(
        &[r],
        &MomentOptions {
            n_traj: 4,
            p_values: vec![0.25],
            zeta: 1.0,
        },
    )
    .unwrap_err();
    assert!(matches!(err, EstimatorError::InvalidMomentOrder { .. }));
}

#[test]
fn doubling_trajectories_shrinks_standard_errors() {
    let r = run(jump_diffusion(8), 0.01, 0.5, Scheme::ExponentialEuler, cosine());
    let opts = |n| MomentOptions {
        n_traj: n,
        p_values: vec![1.0],
        zeta: 1.0,
    };
    let small = estimate_moments(std::slice::from_ref(&r), &opts(2000)).unwrap();
    let large = estimate_moments(std::slice::from_ref(&r), &opts(4000)).unwrap();
    let ratio = large.sup(8, 1.0).unwrap().std_error / small.sup(8, 1.0).unwrap().std_error;
    assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
    let ratio_v = large.v(8).unwrap().std_error / small.v(8).unwrap().std_error;
    assert!((ratio_v * 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio_v}");
}

#[test]
fn excessive_blowups_fail_the_run() {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 8).unwrap();
    let nu = IntensityMeasure::new(vec![40.0], vec![20.0]).unwrap();
    let mut profile = vec![0.0; grid.dim()];
    profile[1] = 1.0;
    profile[6] = 1.0;
    let sys = GalerkinSystem::deterministic(grid)
        .with_cutoff(CutoffSpec::disabled(8))
        .with_jumps(Arc::new(AdditiveJump { profile }), nu);
    let mut r = run(sys, 0.01, 1.0, Scheme::ExponentialEuler, InitialCondition::Zero);
    r.config.stopping_radius = Some(1e300);
    r.config.blowup_threshold = 1e8;
    let err = estimate_moments(
        &[r],
        &MomentOptions {
            n_traj: 20,
            p_values: vec![1.0],
            zeta: 1.0,
        },
    )
    .unwrap_err();
    assert!(matches!(err, EstimatorError::TooManyBlowUps { .. }), "{err:?}");
}

#[test]
fn noise_off_ito_identity_is_the_energy_balance() {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 32).unwrap();
    let r = run(
        GalerkinSystem::deterministic(grid.clone()),
        1e-3,
        1.0,
        Scheme::ExponentialRk4,
        InitialCondition::Modes {
            coeffs: vec![0.3, 1.0, 0.2, 0.0, 0.5],
        },
    );
    let traj = simulate(&r.config, &r.system, &r.u0, 0).unwrap();
    for p in [1.0, 1.5, 2.0] {
        let paths = ito_decomposition(&traj, &r.system, p).unwrap();
        assert!(paths.m.iter().all(|&v| v == 0.0));
        assert!(paths.i.iter().all(|&v| v == 0.0));
        assert!(paths.k_wiener.iter().all(|&v| v == 0.0));
        assert!(
            paths.max_relative_residual < 1e-6,
            "p = {p}: {}",
            paths.max_relative_residual
        );
    }
    assert!(matches!(
        ito_decomposition(&traj, &r.system, 0.5),
        Err(EstimatorError::InvalidMomentOrder { .. })
    ));
    let other = GalerkinSystem::deterministic(SpectralGrid::new(0.0, 2.0 * PI, 16).unwrap());
    assert!(matches!(
        ito_decomposition(&traj, &other, 1.0),
        Err(EstimatorError::Mismatch(_))
    ));
}

#[test]
fn jump_martingale_and_wiener_integral_have_zero_mean() {
    let r = run(jump_diffusion(8), 0.01, 0.5, Scheme::ExponentialEuler, cosine());
    let report = martingale_check(&r, 4000, 1.0, None).unwrap();
    assert!(report.jump_within_3sigma, "{report:?}");
    assert!(report.wiener_within_3sigma, "{report:?}");
    assert!(report.doob.mean.is_finite());
    assert!(report.jump_martingale.std_error > 0.0);
}

#[test]
fn remainder_process_respects_the_taylor_bound() {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 8).unwrap();
    let nu = IntensityMeasure::new(vec![-0.4, 0.6], vec![2.0, 1.0]).unwrap();
    let p = 2.0;
    let model = LevyNoiseModel::with_closed_form(
        Arc::new(BoundedMultiplicativeJump { radius: 2.0 }),
        &nu,
        1.0,
        &[2.0 * p],
    )
    .unwrap();
    let c7 = remainder_constant(&model, &minimal_constants(p)).unwrap();
    let sys = GalerkinSystem::deterministic(grid).with_jumps(model.coefficient.clone(), nu);
    let r = run(sys, 0.01, 1.0, Scheme::ExponentialEuler, cosine());
    let report = martingale_check(&r, 500, p, Some(c7)).unwrap();
    assert_eq!(report.remainder_bound_violations, Some(0));
}

fn random_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

#[test]
fn taylor_constants_dominate_random_search_and_are_nearly_tight() {
    // Oracle: maximise the ratios over random high-dimensional pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [1.0, 1.5, 2.0, 3.0] {
        let k = minimal_constants(p);
        let mut best1: f64 = 0.0;
        for _ in 0..20_000 {
            let n = rng.random_range(1..6);
            let x = random_vec(&mut rng, n, 1.0);
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let h = random_vec(&mut rng, n, scale);
            let rep = taylor_remainder_check(&x, &h, &k);
            assert!(rep.holds(), "p = {p}: {rep:?}");
            best1 = best1.max(rep.first.lhs / (rep.first.rhs / k.c1));
        }
        assert!(
            best1 <= k.c1 && best1 > 0.9 * k.c1,
            "p = {p}: search {best1}, computed {}",
            k.c1
        );
    }
}

#[test]
fn taylor_check_at_unit_x_and_small_h() {
    let k = minimal_constants(2.0);
    let x = [0.6, 0.8, 0.0];
    let h = [0.0, 0.06, 0.08];
    let rep = taylor_remainder_check(&x, &h, &k);
    assert!(rep.holds());
    assert!(rep.first.margin() > 0.0);
    // x = 0: left side |h|^{2p}.
    let rep0 = taylor_remainder_check(&[0.0, 0.0], &[0.3, 0.4], &k);
    assert!((rep0.first.lhs - 0.5f64.powi(4)).abs() < 1e-15);
    assert!(rep0.holds());
}

#[test]
fn constant_state_gives_a_degenerate_aldous_fit() {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 8).unwrap();
    let r = run(
        GalerkinSystem::deterministic(grid),
        1.0 / 64.0,
        1.0,
        Scheme::ExponentialEuler,
        InitialCondition::Constant { value: 2.0 },
    );
    let thetas = [1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0];
    let rep = aldous_check(&r, 4, &thetas, StoppingRule::RunningMedianCrossing).unwrap();
    assert!(rep.degenerate);
    assert!(rep.fitted_b.is_none());
    assert!(aldous_check(&r, 4, &[], StoppingRule::RunningMedianCrossing).is_err());
}

#[test]
fn deterministic_kdv_increments_scale_linearly() {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 64).unwrap();
    let r = run(
        GalerkinSystem::deterministic(grid),
        1.0 / 1024.0,
        1.0,
        Scheme::ExponentialRk4,
        InitialCondition::Modes {
            coeffs: vec![0.0, 1.0, 0.0, 0.3, 0.2],
        },
    );
    let thetas: Vec<f64> = (4..=8).rev().map(|k| 2f64.powi(-k)).collect();
    for rule in [
        StoppingRule::RunningMedianCrossing,
        StoppingRule::Fixed { time: 0.3 },
        StoppingRule::LevelCrossing { level: 0.0 },
    ] {
        let rep = aldous_check(&r, 2, &thetas, rule).unwrap();
        assert!(!rep.degenerate);
        assert!(rep.fitted_b.unwrap() >= 0.9, "{rule:?}: {:?}", rep.fitted_b);
    }
}

#[test]
fn diffusion_only_strong_order_is_at_least_point_nine() {
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 8).unwrap();
    let sys = GalerkinSystem::deterministic(grid).with_diffusion(Arc::new(DiagonalDamped {
        sigma0: 0.3,
        decay: 2.0,
        radius: 1e3,
        n_modes: 17,
    }));
    let r = run(sys, 1.0 / 16.0, 0.5, Scheme::ExponentialEuler, cosine());
    let rep = strong_order_check(&r, 200, 3).unwrap();
    assert_eq!(rep.dts.len(), 4);
    assert!(rep.order() >= 0.9, "{rep:?}");
}

#[test]
fn halving_the_step_keeps_moments_within_two_standard_errors() {
    let r = run(jump_diffusion(8), 0.01, 0.5, Scheme::ExponentialRk4, cosine());
    let rep: RefinementReport = refinement_check(&r, 1000, &[1.0, 2.0]).unwrap();
    assert!(rep.passed, "{rep:?}");
    assert_eq!(rep.entries.len(), 3);
    for e in &rep.entries {
        assert!(e.paired_difference.mean.abs() < e.coarse.std_error);
    }
}

#[test]
fn sup_moment_includes_left_limits() {
    // A single negative jump from the peak: the sup sees the left limit.
    let grid = SpectralGrid::new(0.0, 2.0 * PI, 4).unwrap();
    let nu = IntensityMeasure::new(vec![-1.0], vec![1.0]).unwrap();
    let sys =
        GalerkinSystem::deterministic(grid.clone()).with_jumps(Arc::new(BoundedMultiplicativeJump { radius: 1e9 }), nu);
    let r = run(sys, 0.1, 1.0, Scheme::ExponentialEuler, cosine());
    let traj = simulate(&r.config, &r.system, &r.u0, 0).unwrap();
    let (sup, _) = skdv_core::estimators::moments::path_functionals(&traj, &grid);
    let max_left = traj
        .jump_log
        .iter()
        .map(|j| j.left.iter().map(|c| c * c).sum::<f64>())
        .fold(0.0, f64::max);
    assert!(sup >= max_left);
    assert!(sup >= grid.norm(&r.u0, NormKind::H).powi(2));
}
