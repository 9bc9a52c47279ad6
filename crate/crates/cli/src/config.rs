//! Experiment configuration: one JSON document with a `model` block and an
//! optional block per subcommand. Unknown keys are rejected everywhere.

use std::path::Path;

use moran_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "moran-experiment/1";

fn schema_version() -> String {
    SCHEMA_VERSION.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: String,
    pub model: ModelParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ode: OdeConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub clt: CltConfig,
    #[serde(default)]
    pub stationary: StationaryConfig,
    #[serde(default)]
    pub selfcheck: SelfcheckConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeConfig {
    pub z0: f64,
    pub t_end: f64,
    pub grid_step: f64,
    pub oracle_step: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            z0: 0.1,
            t_end: 10.0,
            grid_step: 0.01,
            oracle_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub z0: f64,
    pub t_end: f64,
    pub grid_step: f64,
    pub n_paths: usize,
    pub deviation_threshold: f64,
    pub write_paths: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            z0: 0.1,
            t_end: 5.0,
            grid_step: 0.01,
            n_paths: 200,
            deviation_threshold: 0.05,
            write_paths: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CltConfig {
    pub z0: f64,
    pub times: Vec<f64>,
    pub n_paths: usize,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self {
            z0: 0.1,
            times: vec![0.0, 1.0, 2.0, 4.0],
            n_paths: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationaryConfig {
    /// Population sizes to sweep; empty means just `model.N`.
    pub sizes: Vec<u64>,
    pub epsilon: f64,
    pub write_csv: bool,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            sizes: Vec::new(),
            epsilon: 0.05,
            write_csv: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfcheckConfig {
    /// Include the Monte Carlo law-of-large-numbers and CLT checks.
    pub monte_carlo: bool,
}

impl Default for SelfcheckConfig {
    fn default() -> Self {
        Self { monte_carlo: true }
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} must be nonnegative, got {v}"
        )))
    }
}

fn proportion(name: &str, v: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

impl ExperimentConfig {
    /// `N = 10^4, s = 1, u = 0.5, nu0 = 0.5` with default command blocks.
    pub fn reference() -> Self {
        Self {
            schema_version: schema_version(),
            model: ModelParams::new(10_000, 1.0, 0.5, 0.5).expect("valid reference set"),
            seed: 20_261_014,
            ode: OdeConfig::default(),
            simulate: SimulateConfig::default(),
            clt: CltConfig::default(),
            stationary: StationaryConfig {
                sizes: vec![500, 2000, 5000],
                ..StationaryConfig::default()
            },
            selfcheck: SelfcheckConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every numeric field against the preconditions of the
    /// operations it feeds, before anything runs.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {:?}, expected {SCHEMA_VERSION:?}",
                self.schema_version
            )));
        }
        self.model
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let o = &self.ode;
        proportion("ode.z0", o.z0)?;
        nonnegative("ode.t_end", o.t_end)?;
        positive("ode.grid_step", o.grid_step)?;
        positive("ode.oracle_step", o.oracle_step)?;

        let s = &self.simulate;
        proportion("simulate.z0", s.z0)?;
        positive("simulate.t_end", s.t_end)?;
        positive("simulate.grid_step", s.grid_step)?;
        positive("simulate.deviation_threshold", s.deviation_threshold)?;
        if s.n_paths == 0 {
            return Err(CliError::Config(
                "simulate.n_paths must be at least 1".into(),
            ));
        }

        let c = &self.clt;
        proportion("clt.z0", c.z0)?;
        if c.n_paths == 0 {
            return Err(CliError::Config("clt.n_paths must be at least 1".into()));
        }
        if c.times.is_empty() {
            return Err(CliError::Config("clt.times must not be empty".into()));
        }
        for t in &c.times {
            nonnegative("clt.times[]", *t)?;
        }
        if c.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config(
                "clt.times must be strictly increasing".into(),
            ));
        }

        let st = &self.stationary;
        positive("stationary.epsilon", st.epsilon)?;
        if st.sizes.contains(&0) {
            return Err(CliError::Config(
                "stationary.sizes entries must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// `0, step, 2 step, ...` up to and including `t_end`.
pub fn uniform_grid(t_end: f64, step: f64) -> Vec<f64> {
    let n = moran_core::ode::step_count(0.0, t_end, step);
    let mut grid: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(t_end)).collect();
    if let Some(last) = grid.last_mut() {
        *last = t_end;
    }
    grid.dedup();
    grid
}
