//! Experiment configuration: TOML file, `--set` overrides, validation.
//!
//! Precedence is flags > file > defaults. Every validation failure names the
//! offending key.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use skdv_core::coefficients::{
    AdditiveJump, BoundedMultiplicativeJump, Coercivity, DiagonalDamped, DiffusionModel, GrowthConstant,
    JumpCoefficient, LevyNoiseModel, StateSampler, ZeroJump,
};
use skdv_core::estimators::{check_moment_orders, validate_thetas, Run, StoppingRule};
use skdv_core::initial::InitialCondition;
use skdv_core::noise::IntensityMeasure;
use skdv_core::solver::{GalerkinSystem, Scheme, SolverConfig, DEFAULT_BLOWUP_THRESHOLD};
use skdv_core::spectral::{CutoffMode, CutoffSpec, SpectralGrid};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub solver: SolverSection,
    #[serde(default)]
    pub initial: InitialCondition,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub x1: f64,
    #[serde(default = "two_pi")]
    pub x2: f64,
    pub m: usize,
    /// Collocation points; defaults to the smallest dealiased FFT size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_phys: Option<usize>,
}

fn two_pi() -> f64 {
    2.0 * PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopping_radius: Option<f64>,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
    #[serde(default)]
    pub cutoff: CutoffConfig,
}

fn default_blowup() -> f64 {
    DEFAULT_BLOWUP_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    #[serde(default)]
    pub mode: CutoffMode,
    #[serde(default = "half")]
    pub plateau: f64,
    #[serde(default = "one")]
    pub support: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            mode: CutoffMode::default(),
            plateau: 0.5,
            support: 1.0,
        }
    }
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Atoms `y_j` of the intensity measure.
    #[serde(default)]
    pub marks: Vec<f64>,
    /// Rates `ν_j` per unit time.
    #[serde(default)]
    pub rates: Vec<f64>,
    #[serde(default)]
    pub jump: JumpConfig,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpModelKind {
    #[default]
    None,
    Additive,
    BoundedMultiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    #[serde(default)]
    pub model: JumpModelKind,
    /// `R0` of the bounded multiplicative model.
    #[serde(default = "one")]
    pub radius: f64,
    /// Basis coefficients of the additive profile.
    #[serde(default)]
    pub profile: Vec<f64>,
    #[serde(default = "one")]
    pub zeta: f64,
    /// Declared constants; closed-form values are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<Vec<GrowthConstant>>,
}

impl Default for JumpConfig {
    fn default() -> Self {
        Self {
            model: JumpModelKind::None,
            radius: 1.0,
            profile: Vec::new(),
            zeta: 1.0,
            lipschitz: None,
            growth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionModelKind {
    #[default]
    None,
    DiagonalDamped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    #[serde(default)]
    pub model: DiffusionModelKind,
    #[serde(default = "default_sigma0")]
    pub sigma0: f64,
    #[serde(default = "one")]
    pub decay: f64,
    #[serde(default = "default_diffusion_radius")]
    pub radius: f64,
    /// Wiener coordinates; defaults to `2m + 1` for the largest m in use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_phi: Option<f64>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
    /// Defaults to `C_Φ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

fn default_sigma0() -> f64 {
    0.1
}

fn default_diffusion_radius() -> f64 {
    10.0
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            model: DiffusionModelKind::None,
            sigma0: default_sigma0(),
            decay: 1.0,
            radius: default_diffusion_radius(),
            n_modes: None,
            l_phi: None,
            c_phi: None,
            alpha: 0.0,
            beta: 0.0,
            kappa: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<f64>,
    /// m-sweep for `moments`; empty means `grid.m` only.
    #[serde(default)]
    pub m_values: Vec<usize>,
    /// Also rerun at `dt/2` with the same noise and compare.
    #[serde(default)]
    pub refine: bool,
    #[serde(default)]
    pub thetas: Vec<f64>,
    #[serde(default)]
    pub stopping_rule: StoppingRule,
    /// States sampled by `validate-model`.
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub sampler: StateSampler,
}

fn default_n_traj() -> usize {
    1
}

fn default_p_values() -> Vec<f64> {
    vec![1.0]
}

fn default_n_samples() -> usize {
    1000
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            n_traj: default_n_traj(),
            p_values: default_p_values(),
            m_values: Vec::new(),
            refine: false,
            thetas: Vec::new(),
            stopping_rule: StoppingRule::default(),
            n_samples: default_n_samples(),
            sampler: StateSampler::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFormat {
    #[default]
    Text,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Overridden by `--out`; never recorded in manifests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: TrajectoryFormat,
    /// Trajectory files written by `moments` and `aldous`; `simulate`
    /// writes every trajectory.
    #[serde(default = "one_usize")]
    pub save_trajectories: usize,
    #[serde(default)]
    pub verbosity: u8,
}

fn one_usize() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            format: TrajectoryFormat::default(),
            save_trajectories: 1,
            verbosity: 0,
        }
    }
}

/// Which checks apply beyond the common ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Simulate,
    Moments,
    Aldous,
    ValidateModel,
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parses `key=value`; the value is read as a TOML value, falling back to a
/// bare string.
pub fn parse_override(spec: &str) -> Result<(String, toml::Value), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| invalid(spec, "override must have the form key=value"))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(invalid(key, "malformed key"));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}

pub fn apply_override(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("nonempty key");
    let mut cur = table;
    for (i, part) in parents.iter().enumerate() {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(invalid(&parts[..=i].join("."), "is not a table")),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn from_table(table: toml::Table) -> Result<Self, CliError> {
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let message = e.inner().to_string();
            let message = message.trim().to_string();
            // Name the missing key itself rather than its parent table.
            if let Some(field) = message
                .strip_prefix("missing field `")
                .and_then(|r| r.split('`').next())
            {
                let key = if path == "." {
                    field.to_string()
                } else {
                    format!("{path}.{field}")
                };
                return invalid(&key, "required key is missing");
            }
            invalid(&path, message)
        })
    }

    pub fn from_toml_str(text: &str, overrides: &[(String, toml::Value)]) -> Result<Self, CliError> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| invalid("<file>", e.to_string().trim()))?;
        for (k, v) in overrides {
            apply_override(&mut table, k, v.clone())?;
        }
        Self::from_table(table)
    }

    pub fn load(path: &Path, overrides: &[(String, toml::Value)]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn m_values(&self) -> Vec<usize> {
        if self.estimator.m_values.is_empty() {
            vec![self.grid.m]
        } else {
            self.estimator.m_values.clone()
        }
    }

    fn grid_for(&self, m: usize) -> Result<SpectralGrid, CliError> {
        let g = &self.grid;
        let grid = match g.n_phys {
            Some(n) => SpectralGrid::with_points(g.x1, g.x2, m, n),
            None => SpectralGrid::new(g.x1, g.x2, m),
        };
        grid.map_err(|e| invalid("grid", e.to_string()))
    }

    fn intensity(&self) -> Result<IntensityMeasure, CliError> {
        let n = &self.noise;
        if n.marks.len() != n.rates.len() {
            return Err(invalid(
                "noise.rates",
                format!("{} rates for {} marks", n.rates.len(), n.marks.len()),
            ));
        }
        IntensityMeasure::new(n.marks.clone(), n.rates.clone()).map_err(|e| invalid("noise.rates", e.to_string()))
    }

    fn jump_coefficient(&self, grid: &SpectralGrid) -> Result<Arc<dyn JumpCoefficient>, CliError> {
        let j = &self.noise.jump;
        Ok(match j.model {
            JumpModelKind::None => Arc::new(ZeroJump),
            JumpModelKind::Additive => {
                if j.profile.is_empty() || j.profile.iter().any(|x| !x.is_finite()) {
                    return Err(invalid(
                        "noise.jump.profile",
                        "additive model needs finite profile coefficients",
                    ));
                }
                let mut profile = j.profile.clone();
                profile.resize(grid.dim(), 0.0);
                Arc::new(AdditiveJump { profile })
            }
            JumpModelKind::BoundedMultiplicative => {
                if !(j.radius > 0.0 && j.radius.is_finite()) {
                    return Err(invalid("noise.jump.radius", "must be positive and finite"));
                }
                Arc::new(BoundedMultiplicativeJump { radius: j.radius })
            }
        })
    }

    /// Jump model with declared constants (closed form unless given).
    pub fn jump_model(&self, grid: &SpectralGrid, nu: &IntensityMeasure) -> Result<LevyNoiseModel, CliError> {
        let j = &self.noise.jump;
        let coef = self.jump_coefficient(grid)?;
        let closed = LevyNoiseModel::with_closed_form(coef.clone(), nu, j.zeta, &[])
            .map_err(|e| invalid("noise.jump.zeta", e.to_string()))?;
        let lipschitz = j.lipschitz.unwrap_or(closed.lipschitz);
        let growth = j.growth.clone().unwrap_or(closed.growth);
        LevyNoiseModel::new(coef, lipschitz, growth, j.zeta).map_err(|e| invalid("noise.jump", e.to_string()))
    }

    fn n_wiener_modes(&self) -> usize {
        let max_m = self.m_values().into_iter().chain([self.grid.m]).max().unwrap_or(1);
        self.noise.diffusion.n_modes.unwrap_or(2 * max_m + 1)
    }

    fn diagonal_damped(&self) -> Result<DiagonalDamped, CliError> {
        let d = &self.noise.diffusion;
        if !(d.sigma0 >= 0.0 && d.sigma0.is_finite()) {
            return Err(invalid("noise.diffusion.sigma0", "must be nonnegative and finite"));
        }
        if !(d.decay >= 0.0 && d.decay.is_finite()) {
            return Err(invalid("noise.diffusion.decay", "must be nonnegative and finite"));
        }
        if !(d.radius > 0.0) {
            return Err(invalid("noise.diffusion.radius", "must be positive"));
        }
        let n_modes = self.n_wiener_modes();
        if n_modes == 0 {
            return Err(invalid("noise.diffusion.n_modes", "must be at least 1"));
        }
        Ok(DiagonalDamped {
            sigma0: d.sigma0,
            decay: d.decay,
            radius: d.radius,
            n_modes,
        })
    }

    /// Diffusion model with declared constants, if one is selected.
    pub fn diffusion_model(&self, grid: &SpectralGrid) -> Result<Option<DiffusionModel>, CliError> {
        let d = &self.noise.diffusion;
        if d.model == DiffusionModelKind::None {
            return Ok(None);
        }
        let coef = self.diagonal_damped()?;
        let closed = DiffusionModel::diagonal_damped(
            coef,
            grid,
            Coercivity {
                alpha: d.alpha,
                beta: d.beta,
                kappa: 0.0,
            },
        )
        .map_err(|e| invalid("noise.diffusion", e.to_string()))?;
        let c_phi = d.c_phi.unwrap_or(closed.c_phi);
        let coercivity = Coercivity {
            alpha: d.alpha,
            beta: d.beta,
            kappa: d.kappa.unwrap_or(c_phi),
        };
        DiffusionModel::new(closed.coefficient, d.l_phi.unwrap_or(closed.l_phi), c_phi, coercivity)
            .map(Some)
            .map_err(|e| invalid("noise.diffusion", e.to_string()))
    }

    fn solver_config(&self, m: usize) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let cfg = SolverConfig {
            dt: s.dt,
            horizon: s.horizon,
            m,
            stopping_radius: s.stopping_radius,
            blowup_threshold: s.blowup_threshold,
            scheme: s.scheme,
            seed: s.seed,
        };
        cfg.validate().map_err(|e| {
            let text = e.to_string();
            let detail = text.trim_start_matches("invalid solver configuration: ");
            let (key, msg) = detail.split_once(": ").unwrap_or(("", detail));
            invalid(&format!("solver.{key}"), msg)
        })?;
        Ok(cfg)
    }

    /// A fully built run at `m`.
    pub fn run_for(&self, m: usize) -> Result<Run, CliError> {
        let grid = self.grid_for(m)?;
        let c = &self.solver.cutoff;
        let cutoff = CutoffSpec::with_profile(m, c.plateau, c.support, c.mode)
            .map_err(|e| invalid("solver.cutoff", e.to_string()))?;
        let nu = self.intensity()?;
        let mut system = GalerkinSystem::deterministic(grid.clone()).with_cutoff(cutoff);
        if self.noise.jump.model != JumpModelKind::None && !nu.is_empty() {
            system = system.with_jumps(self.jump_coefficient(&grid)?, nu);
        }
        if self.noise.diffusion.model != DiffusionModelKind::None {
            system = system.with_diffusion(Arc::new(self.diagonal_damped()?));
        }
        let u0 = self
            .initial
            .build(&grid)
            .map_err(|e| invalid("initial", e.to_string()))?;
        Ok(Run {
            config: self.solver_config(m)?,
            system,
            u0,
        })
    }

    /// Every check that can be made without simulating.
    pub fn validate(&self, purpose: Purpose) -> Result<(), CliError> {
        if self.grid.m == 0 {
            return Err(invalid("grid.m", "must be at least 1"));
        }
        let ms = self.m_values();
        if ms.contains(&0) {
            return Err(invalid("estimator.m_values", "entries must be at least 1"));
        }
        for &m in &ms {
            self.run_for(m)?;
        }
        self.run_for(self.grid.m)?;
        let grid = self.grid_for(self.grid.m)?;
        let nu = self.intensity()?;
        self.jump_model(&grid, &nu)?;
        self.diffusion_model(&grid)?;
        let est = &self.estimator;
        if est.n_traj == 0 {
            return Err(invalid("estimator.n_traj", "must be at least 1"));
        }
        match purpose {
            Purpose::Simulate => {}
            Purpose::Moments => {
                if est.n_traj < 2 {
                    return Err(invalid("estimator.n_traj", "moments need at least 2 trajectories"));
                }
                check_moment_orders(&est.p_values, self.noise.jump.zeta)
                    .map_err(|e| invalid("estimator.p_values", e.to_string()))?;
            }
            Purpose::Aldous => {
                validate_thetas(&est.thetas, self.solver.horizon)
                    .map_err(|e| invalid("estimator.thetas", e.to_string()))?;
            }
            Purpose::ValidateModel => {
                if est.n_samples == 0 {
                    return Err(invalid("estimator.n_samples", "must be at least 1"));
                }
                let s = &est.sampler;
                if !(s.max_radius > 0.0 && s.max_radius.is_finite()) {
                    return Err(invalid("estimator.sampler.max_radius", "must be positive and finite"));
                }
            }
        }
        Ok(())
    }

    pub fn sweep(&self) -> Vec<usize> {
        self.m_values()
    }

    pub fn main_grid(&self) -> Result<SpectralGrid, CliError> {
        self.grid_for(self.grid.m)
    }

    pub fn intensity_measure(&self) -> Result<IntensityMeasure, CliError> {
        self.intensity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nm = 4\n[solver]\ndt = 0.1\nhorizon = 0.0\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = ExperimentConfig::from_toml_str(MINIMAL, &[]).unwrap();
        assert_eq!(c.grid.x2, 2.0 * PI);
        assert_eq!(c.solver.scheme, Scheme::ExponentialEuler);
        assert_eq!(c.estimator.n_traj, 1);
        c.validate(Purpose::Simulate).unwrap();
    }

    #[test]
    fn missing_dt_names_the_key() {
        let err = ExperimentConfig::from_toml_str("[grid]\nm = 4\n[solver]\nhorizon = 1.0\n", &[]).unwrap_err();
        match err {
            CliError::Config { key, .. } => assert_eq!(key, "solver.dt"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_mistyped_keys_are_named() {
        let err = ExperimentConfig::from_toml_str(&format!("{MINIMAL}typo = 1\n"), &[]).unwrap_err();
        assert!(matches!(err, CliError::Config { .. }));
        let err = ExperimentConfig::from_toml_str(MINIMAL, &[parse_override("grid.m=\"x\"").unwrap()]).unwrap_err();
        match err {
            CliError::Config { key, .. } => assert_eq!(key, "grid.m"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn overrides_take_precedence_and_create_tables() {
        let sets = [
            parse_override("solver.dt=0.01").unwrap(),
            parse_override("noise.jump.model=bounded_multiplicative").unwrap(),
            parse_override("estimator.p_values=[1, 2]").unwrap(),
        ];
        let c = ExperimentConfig::from_toml_str(MINIMAL, &sets).unwrap();
        assert_eq!(c.solver.dt, 0.01);
        assert_eq!(c.noise.jump.model, JumpModelKind::BoundedMultiplicative);
        assert_eq!(c.estimator.p_values, vec![1.0, 2.0]);
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
    }

    #[test]
    fn serialization_round_trips() {
        let sets = [
            parse_override("initial={kind = \"cosine\", amplitude = 0.3, mode = 2}").unwrap(),
            parse_override("noise.marks=[0.1, -0.2]").unwrap(),
            parse_override("noise.rates=[1.0, 2.0]").unwrap(),
            parse_override("noise.diffusion.model=diagonal_damped").unwrap(),
            parse_override("noise.diffusion.kappa=3.5").unwrap(),
            parse_override("estimator.stopping_rule={rule = \"level_crossing\", level = 2.0}").unwrap(),
            parse_override("solver.stopping_radius=7.0").unwrap(),
        ];
        let c = ExperimentConfig::from_toml_str(MINIMAL, &sets).unwrap();
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string(), &[]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_names_keys() {
        let check = |set: &str, purpose: Purpose, want: &str| {
            let sets = [
                parse_override(set).unwrap(),
                parse_override("estimator.n_traj=4").unwrap(),
            ];
            let c = ExperimentConfig::from_toml_str(MINIMAL, &sets).unwrap();
            match c.validate(purpose).unwrap_err() {
                CliError::Config { key, .. } => assert_eq!(key, want, "{set}"),
                other => panic!("{other:?}"),
            }
        };
        check("solver.dt=-1.0", Purpose::Simulate, "solver.dt");
        check("noise.marks=[1.0]", Purpose::Simulate, "noise.rates");
        check("estimator.p_values=[9.0]", Purpose::Moments, "estimator.p_values");
        check("estimator.thetas=[]", Purpose::Aldous, "estimator.thetas");
        check("noise.jump.model=additive", Purpose::Simulate, "noise.jump.profile");
        check("solver.cutoff.plateau=0.2", Purpose::Simulate, "solver.cutoff");
    }
}
