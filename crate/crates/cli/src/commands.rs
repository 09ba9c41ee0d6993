use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use skdv_core::coefficients::{validate_hypotheses, ModelRef, ValidationReport};
use skdv_core::estimators::{
    aldous_check, estimate_moments, map_ensemble, refinement_check, AldousReport, EnsembleStatistics, MomentOptions,
    RefinementReport, Run,
};
use skdv_core::solver::simulate;
use skdv_core::spectral::NormKind;
use skdv_core::trajectory::Trajectory;

use crate::config::{ExperimentConfig, Purpose, TrajectoryFormat};
use crate::error::CliError;
use crate::manifest::{CommandKind, Manifest, OutputDir, MANIFEST_NAME};

pub const DEFAULT_OUT_DIR: &str = "skdv-out";

impl CommandKind {
    fn purpose(self) -> Purpose {
        match self {
            CommandKind::Simulate => Purpose::Simulate,
            CommandKind::Moments => Purpose::Moments,
            CommandKind::Aldous => Purpose::Aldous,
            CommandKind::ValidateModel => Purpose::ValidateModel,
        }
    }
}

fn say(config: &ExperimentConfig, line: &str) {
    if config.output.verbosity > 0 {
        eprintln!("{line}");
    }
}

fn write_trajectory(
    out: &mut OutputDir,
    config: &ExperimentConfig,
    stem: &str,
    tr: &Trajectory,
) -> Result<(), CliError> {
    match config.output.format {
        TrajectoryFormat::Text => out.write(&format!("trajectories/{stem}.txt"), tr.to_text().as_bytes())?,
        TrajectoryFormat::Binary => out.write(&format!("trajectories/{stem}.bin"), &tr.to_binary())?,
    }
    if !tr.jump_log.is_empty() {
        let mut text = String::from("# t mark_index mark\n");
        for j in &tr.jump_log {
            let _ = writeln!(text, "{:e} {} {:e}", j.t, j.mark_index, j.mark);
        }
        out.write(&format!("trajectories/{stem}.jumps.txt"), text.as_bytes())?;
    }
    Ok(())
}

fn save_samples(out: &mut OutputDir, config: &ExperimentConfig, run: &Run, prefix: &str) -> Result<(), CliError> {
    let n = config.output.save_trajectories.min(config.estimator.n_traj);
    for i in 0..n {
        // Trajectories that blew up are accounted for in the report.
        if let Ok(tr) = simulate(&run.config, &run.system, &run.u0, i as u64) {
            write_trajectory(out, config, &format!("{prefix}traj_{i:05}"), &tr)?;
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TrajectorySummary {
    index: usize,
    n_times: usize,
    n_jumps: usize,
    stopped_at: Option<f64>,
    final_time: f64,
    final_h_norm: f64,
    final_v_norm: f64,
    mass: f64,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    m: usize,
    n_traj: usize,
    stopping_radius: f64,
    trajectories: Vec<TrajectorySummary>,
}

fn simulate_cmd(config: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let run = config.run_for(config.grid.m)?;
    let n = config.estimator.n_traj;
    let results = map_ensemble(&run, n, |_, r| r);
    let grid = &run.system.grid;
    let mut summaries = Vec::with_capacity(n);
    for (i, r) in results.into_iter().enumerate() {
        let tr = r?;
        write_trajectory(out, config, &format!("traj_{i:05}"), &tr)?;
        let last = tr.final_state();
        summaries.push(TrajectorySummary {
            index: i,
            n_times: tr.len(),
            n_jumps: tr.jump_log.len(),
            stopped_at: tr.stopped_at,
            final_time: last.t,
            final_h_norm: grid.norm(last, NormKind::H),
            final_v_norm: grid.norm(last, NormKind::V),
            mass: grid.mass(last),
        });
    }
    say(config, &format!("simulated {n} trajectories at m = {}", run.m()));
    out.write_json(
        "report.json",
        &SimulateReport {
            m: run.m(),
            n_traj: n,
            stopping_radius: run.config.stopping_radius_for(&run.u0),
            trajectories: summaries,
        },
    )
}

#[derive(Debug, Serialize)]
struct MomentsReport<'a> {
    statistics: &'a EnsembleStatistics,
    refinement: Vec<RefinementReport>,
}

fn moments_cmd(config: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let est = &config.estimator;
    let runs = config
        .sweep()
        .into_iter()
        .map(|m| config.run_for(m))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = MomentOptions {
        n_traj: est.n_traj,
        p_values: est.p_values.clone(),
        zeta: config.noise.jump.zeta,
    };
    let stats = estimate_moments(&runs, &opts)?;
    let mut refinement = Vec::new();
    if est.refine {
        for run in &runs {
            refinement.push(refinement_check(run, est.n_traj, &est.p_values)?);
        }
    }

    let mut sup = String::from("# m p mean std_error n\n");
    for s in &stats.sup_moment {
        let e = s.estimate;
        let _ = writeln!(sup, "{} {} {:e} {:e} {}", s.m, s.p, e.mean, e.std_error, e.n);
    }
    let mut vint = String::from("# m mean std_error n\n");
    for v in &stats.v_integral {
        let e = v.estimate;
        let _ = writeln!(vint, "{} {:e} {:e} {}", v.m, e.mean, e.std_error, e.n);
    }
    out.write_json(
        "report.json",
        &MomentsReport {
            statistics: &stats,
            refinement,
        },
    )?;
    out.write("sup_moment.dat", sup.as_bytes())?;
    out.write("v_integral.dat", vint.as_bytes())?;
    for run in &runs {
        save_samples(out, config, run, &format!("m{}_", run.m()))?;
    }
    say(config, &format!("moments over m = {:?}", stats.m_values));
    Ok(())
}

fn aldous_cmd(config: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let est = &config.estimator;
    let run = config.run_for(config.grid.m)?;
    let report: AldousReport = aldous_check(&run, est.n_traj, &est.thetas, est.stopping_rule)?;
    let mut dat = String::from("# theta mean std_error n\n");
    for (theta, e) in report.thetas.iter().zip(&report.increments) {
        let _ = writeln!(dat, "{theta:e} {:e} {:e} {}", e.mean, e.std_error, e.n);
    }
    out.write_json("report.json", &report)?;
    out.write("aldous.dat", dat.as_bytes())?;
    save_samples(out, config, &run, "")?;
    say(config, &format!("aldous fitted b = {:?}", report.fitted_b));
    Ok(())
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    passed: bool,
    jump: ValidationReport,
    diffusion: Option<ValidationReport>,
}

fn validate_cmd(config: &ExperimentConfig, out: &mut OutputDir) -> Result<bool, CliError> {
    let grid = config.main_grid()?;
    let nu = config.intensity_measure()?;
    let est = &config.estimator;
    let jump_model = config.jump_model(&grid, &nu)?;
    let jump = validate_hypotheses(ModelRef::Jump(&jump_model, &nu), &grid, &est.sampler, est.n_samples)?;
    let diffusion = match config.diffusion_model(&grid)? {
        Some(d) => Some(validate_hypotheses(
            ModelRef::Diffusion(&d),
            &grid,
            &est.sampler,
            est.n_samples,
        )?),
        None => None,
    };
    let passed = jump.passed && diffusion.as_ref().is_none_or(|d| d.passed);
    for r in std::iter::once(&jump).chain(diffusion.as_ref()) {
        for c in &r.checks {
            println!(
                "{} {}: statistic {:e} threshold {:e} {}",
                r.model,
                c.name,
                c.statistic,
                c.threshold,
                if c.passed { "pass" } else { "FAIL" }
            );
        }
    }
    out.write_json(
        "report.json",
        &ValidateReport {
            passed,
            jump,
            diffusion,
        },
    )?;
    Ok(passed)
}

/// Runs one command into `out_dir` and writes its manifest.
pub fn execute(command: CommandKind, config: &ExperimentConfig, out_dir: &Path) -> Result<Manifest, CliError> {
    config.validate(command.purpose())?;
    let mut out = OutputDir::create(out_dir)?;
    let passed = match command {
        CommandKind::Simulate => simulate_cmd(config, &mut out).map(|_| true)?,
        CommandKind::Moments => moments_cmd(config, &mut out).map(|_| true)?,
        CommandKind::Aldous => aldous_cmd(config, &mut out).map(|_| true)?,
        CommandKind::ValidateModel => validate_cmd(config, &mut out)?,
    };
    let manifest = out.finish(command, config)?;
    if !passed {
        return Err(CliError::ValidationFailed("model hypotheses failed validation".into()));
    }
    Ok(manifest)
}

pub fn resolve_out_dir(flag: Option<&Path>, config: &ExperimentConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Re-runs the command recorded in a manifest and compares every output
/// digest, the manifest included.
pub fn replay(manifest_path: &Path, out_dir: Option<&Path>) -> Result<usize, CliError> {
    let original = Manifest::load(manifest_path)?;
    let original_text = fs::read(manifest_path).map_err(|e| CliError::io(manifest_path, e))?;
    let out_dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| manifest_path.parent().unwrap_or_else(|| Path::new(".")).join("replay"));
    let replayed = match execute(original.command, &original.config, &out_dir) {
        Ok(m) => m,
        // A failed validation is itself a reproducible outcome.
        Err(CliError::ValidationFailed(_)) => Manifest::load(&out_dir.join(MANIFEST_NAME))?,
        Err(e) => return Err(e),
    };
    let mut problems = Vec::new();
    for f in &original.files {
        match replayed.files.iter().find(|g| g.path == f.path) {
            Some(g) if g.sha256 == f.sha256 => {}
            Some(_) => problems.push(format!("{} differs", f.path)),
            None => problems.push(format!("{} was not produced", f.path)),
        }
    }
    for g in &replayed.files {
        if !original.files.iter().any(|f| f.path == g.path) {
            problems.push(format!("{} is new", g.path));
        }
    }
    let new_text = fs::read(out_dir.join(MANIFEST_NAME)).map_err(|e| CliError::io(&out_dir, e))?;
    if new_text != original_text {
        problems.push(format!("{MANIFEST_NAME} differs"));
    }
    if problems.is_empty() {
        Ok(original.files.len() + 1)
    } else {
        Err(CliError::ValidationFailed(format!(
            "replay mismatch: {}",
            problems.join("; ")
        )))
    }
}
