//! Run configuration files and the registry of canonical scenarios.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::comparison_verify::{CheckName, VerifySettings};
use crate::ensemble_random::EnsembleSettings;
use crate::error::{invalid, FrontError, Result};
use crate::front_builder::{ApproxConfig, PeriodicSettings, SolverSettings};
use crate::parallel::Execution;
use crate::reaction_env::{AmplitudeModel, Mode, ReactionEnv, Telegraph};
use crate::tolerances;
use crate::wave_profile::WaveKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveSettings {
    pub kind: WaveKind,
    pub tol: f64,
    /// Size of the negative lobe of the bistable companion.
    pub bistable_delta: f64,
}

impl Default for WaveSettings {
    fn default() -> Self {
        Self {
            kind: WaveKind::Ignition,
            tol: tolerances::SHOOT_TOL,
            bistable_delta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrontSettings {
    pub solver: SolverSettings,
    /// Start times, receding.
    pub s_list: Vec<f64>,
    /// Front estimates are compared on `[0, window]`.
    pub window: f64,
    pub cauchy_tol: f64,
}

impl Default for FrontSettings {
    fn default() -> Self {
        Self {
            solver: SolverSettings::default(),
            s_list: vec![-25.0, -50.0, -100.0, -200.0],
            window: 20.0,
            cauchy_tol: tolerances::CAUCHY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub env: ReactionEnv,
    /// Start time of approximating runs.
    #[serde(default = "default_start")]
    pub start: f64,
    pub horizon: f64,
    #[serde(default)]
    pub run: ApproxConfig,
    #[serde(default)]
    pub wave: WaveSettings,
    #[serde(default)]
    pub front: FrontSettings,
    #[serde(default)]
    pub periodic: PeriodicSettings,
    #[serde(default)]
    pub ensemble: EnsembleSettings,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_start() -> f64 {
    tolerances::SCENARIO_START
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        ReactionEnv::new(self.env.theta, self.env.shape, self.env.amplitude.clone())?;
        if !(self.start.is_finite() && self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(invalid("horizon", "start and horizon must be finite, horizon nonnegative"));
        }
        if self.start > self.horizon {
            return Err(invalid("start", "must not exceed the horizon"));
        }
        self.run.validate()?;
        self.periodic.solver.validate()?;
        self.front.solver.validate()?;
        if !(self.wave.tol > 0.0) {
            return Err(invalid("wave.tol", "must be positive"));
        }
        if self.front.s_list.iter().any(|&s| !(s < 0.0)) {
            return Err(invalid("front.s_list", "start times must be negative"));
        }
        if !self.seeds.is_empty() {
            self.ensemble.validate(self.horizon)?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| FrontError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| FrontError::Config(e.to_string()))
    }

    /// Output directory: the configured one, else `<root>/<scenario>`.
    pub fn output_dir(&self, root: &Path) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| root.join(&self.scenario))
    }
}

pub const CANONICAL: [&str; 5] = ["frozen", "periodic", "quasi_periodic", "telegraph", "telegraph_ensemble"];

/// Telegraph medium switching at rate 0.5 between uniform amplitudes in `[0.5, 2]`.
pub fn telegraph_medium(seed: u64) -> AmplitudeModel {
    AmplitudeModel::Telegraph(Telegraph {
        holding_rate: 0.5,
        a_min: 0.5,
        a_max: 2.0,
        seed,
    })
}

pub fn scenario(name: &str) -> Result<RunConfig> {
    let base = ReactionEnv::constant(0.25, 1.0)?;
    let mut cfg = RunConfig {
        scenario: name.to_string(),
        env: base.clone(),
        start: tolerances::SCENARIO_START,
        horizon: 200.0,
        run: ApproxConfig::default(),
        wave: WaveSettings::default(),
        front: FrontSettings::default(),
        periodic: PeriodicSettings::default(),
        ensemble: EnsembleSettings::default(),
        seeds: Vec::new(),
        verify: VerifySettings::default(),
        output_dir: None,
    };
    let mut coarse = cfg.verify.clone();
    coarse.checks.retain(|c| *c != CheckName::SpeedFormula);
    match name {
        "frozen" => {
            cfg.run.solver.dt = 0.002;
            cfg.run.tracker.every = 0.002;
        }
        "periodic" => {
            cfg.env = base.with_amplitude(AmplitudeModel::Periodic {
                mean: 1.0,
                rho: 0.5,
                period: 10.0,
            })?;
            // the speed-formula comparison needs the trace on every step
            cfg.run.solver.dt = 0.001;
            cfg.run.tracker.every = 0.001;
            cfg.periodic.solver.dt = 0.005;
        }
        "quasi_periodic" => {
            cfg.env = base.with_amplitude(AmplitudeModel::QuasiPeriodic {
                mean: 1.0,
                modes: vec![
                    Mode {
                        amplitude: 0.3,
                        frequency: 0.1,
                    },
                    Mode {
                        amplitude: 0.2,
                        frequency: 0.1 * std::f64::consts::SQRT_2,
                    },
                ],
            })?;
            cfg.verify = coarse;
        }
        "telegraph" => {
            cfg.env = base.with_amplitude(telegraph_medium(1))?;
            cfg.horizon = 400.0;
            cfg.verify = coarse;
        }
        "telegraph_ensemble" => {
            cfg.env = base.with_amplitude(telegraph_medium(0))?;
            cfg.horizon = 400.0;
            cfg.seeds = (0..32).collect();
            cfg.ensemble.execution = Execution::Parallel { workers: 8 };
        }
        other => {
            return Err(invalid(
                "scenario",
                format!("unknown scenario `{other}`; known: {}", CANONICAL.join(", ")),
            ))
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_scenarios_validate_and_round_trip() {
        for name in CANONICAL {
            let cfg = scenario(name).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            let back = RunConfig::from_toml(&text).unwrap();
            assert_eq!(back, cfg, "{name}");
            assert_eq!(back.to_toml().unwrap(), text);
        }
        assert!(scenario("nope").is_err());
    }

    #[test]
    fn unknown_keys_are_named() {
        let mut text = scenario("frozen").unwrap().to_toml().unwrap();
        text = text.replace("[run.solver]", "[run.solver]\ndxx = 0.1");
        let err = RunConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("dxx"), "{err}");

        let text = "scenario = \"x\"\nhorizon = 10.0\n[env]\ntheta = 0.25\nshape = \"quadratic\"\n\
                    [env.amplitude]\nmodel = \"constant\"\na = 1.0\nb = 2.0\n";
        let err = RunConfig::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("unknown field `b`"), "{err}");
    }

    #[test]
    fn invalid_values_rejected_at_load() {
        let mut cfg = scenario("frozen").unwrap();
        cfg.run.solver.dt = -1.0;
        let text = cfg.to_toml().unwrap();
        assert!(matches!(
            RunConfig::from_toml(&text),
            Err(FrontError::InvalidParameter { name: "dt", .. })
        ));
    }
}
