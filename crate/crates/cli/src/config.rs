//! TOML run and scenario configuration files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wristband_core::oselm::DEFAULT_RIDGE;
use wristband_core::{Activation, CircuitConfig, OnlineConfig, PsoConfig, ScenarioConfig};

use crate::error::{CliError, CliResult};

/// Settings for `train`: the online estimator plus the acquisition circuit
/// used to parse the strain file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub calibration_span_s: f64,
    pub training_fraction: f64,
    pub chunk_size: usize,
    pub initial_block: Option<usize>,
    pub ridge: f64,
    pub activation: Activation,
    pub output_dim: usize,
    pub pso: PsoConfig,
    pub circuit: CircuitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let online = OnlineConfig::default();
        Self {
            seed: online.seed,
            calibration_span_s: online.calibration_span_s,
            training_fraction: online.training_fraction,
            chunk_size: online.chunk_size,
            initial_block: online.initial_block,
            ridge: DEFAULT_RIDGE,
            activation: online.activation,
            output_dim: online.output_dim,
            pso: online.pso,
            circuit: CircuitConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn online(&self) -> OnlineConfig {
        OnlineConfig {
            calibration_span_s: self.calibration_span_s,
            training_fraction: self.training_fraction,
            chunk_size: self.chunk_size,
            initial_block: self.initial_block,
            ridge: self.ridge,
            activation: self.activation,
            output_dim: self.output_dim,
            pso: self.pso.clone(),
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> wristband_core::Result<()> {
        self.circuit.validate()?;
        self.online().validate()
    }
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_toml(&text).map_err(|message| CliError::Config {
        path: path.into(),
        message,
    })
}

/// Parses TOML, flattening the error to one line that names the offending key.
pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    toml::from_str(text).map_err(|e| e.message().to_string())
}

pub fn to_toml<T: Serialize>(value: &T) -> Result<String, String> {
    toml::to_string(value).map_err(|e| e.to_string())
}

pub fn load_run_config(path: Option<&Path>) -> CliResult<RunConfig> {
    match path {
        Some(p) => load_toml(p),
        None => Ok(RunConfig::default()),
    }
}

pub fn load_scenario(path: Option<&Path>, preset: Option<&str>) -> CliResult<ScenarioConfig> {
    match (path, preset) {
        (Some(_), Some(_)) => Err(CliError::Usage("--config and --preset are mutually exclusive".into())),
        (Some(p), None) => load_toml(p),
        (None, name) => ScenarioConfig::preset(name.unwrap_or("nominal"))
            .map_err(|e| CliError::core("preset", e)),
    }
}
