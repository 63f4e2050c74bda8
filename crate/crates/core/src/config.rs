//! Experiment description read from TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counting::Budget;
use crate::regions::spec::RegionSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// A sweep over polynomials, moduli, regions and box sizes.
///
/// Every polynomial is reduced mod each modulus. Region rows count `N_F` and
/// compare it with the region bounds; box rows count `M_F(H, R)` at the origin
/// and compare it with the box bound and the heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub polynomials: Vec<String>,
    pub moduli: Vec<u64>,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    #[serde(default)]
    pub heights: Vec<u64>,
    #[serde(default)]
    pub r_values: Vec<u64>,
    /// Bound slack is `m^slack_exponent`.
    #[serde(default)]
    pub slack_exponent: f64,
    /// Monte Carlo budget for region measures that are not known exactly.
    #[serde(default = "default_measure_samples")]
    pub measure_samples: u64,
    #[serde(default)]
    pub budget: Budget,
}

fn default_measure_samples() -> u64 {
    1_000_000
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.polynomials.is_empty() {
            return Err(ConfigError::EmptyGrid("polynomials"));
        }
        if self.moduli.is_empty() {
            return Err(ConfigError::EmptyGrid("moduli"));
        }
        if self.regions.is_empty() && self.heights.is_empty() {
            return Err(ConfigError::EmptyGrid("regions and heights"));
        }
        if !self.heights.is_empty() && self.r_values.is_empty() {
            return Err(ConfigError::EmptyGrid("r_values"));
        }
        if self.r_values.iter().chain(&self.heights).any(|&v| v == 0) {
            return Err(ConfigError::Invalid("heights and r_values must be positive".into()));
        }
        if let Some(&m) = self.moduli.iter().find(|&&m| m < 3) {
            return Err(ConfigError::Invalid(format!("modulus {m} < 3")));
        }
        if self.measure_samples == 0 {
            return Err(ConfigError::Invalid("measure_samples must be positive".into()));
        }
        if !self.slack_exponent.is_finite() {
            return Err(ConfigError::Invalid("slack_exponent must be finite".into()));
        }
        Ok(())
    }
}
