use std::path::Path;

use anyhow::{Context, Result};
use clap::Args;
use gridconf_core::dqn::TrainConfig;
use gridconf_core::reliability::ReliabilityParams;
use serde::{Deserialize, Serialize};

/// Contents of a `--config` TOML file.
///
/// ```toml
/// [train]
/// episodes = 10000
/// learning_rate = 1e-4
///
/// [reliability]
/// repair_hours = 6.0
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub reliability: ReliabilityParams,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Reliability overrides shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ReliabilityArgs {
    /// Failure rate of the lowest-impedance branch (failures/year)
    #[arg(long)]
    pub lambda_min: Option<f64>,
    /// Failure rate of the highest-impedance branch (failures/year)
    #[arg(long)]
    pub lambda_max: Option<f64>,
    /// Repair time applied to every branch (hours)
    #[arg(long)]
    pub repair_hours: Option<f64>,
}

impl ReliabilityArgs {
    pub fn apply(&self, params: &mut ReliabilityParams) {
        if let Some(v) = self.lambda_min {
            params.lambda_min = v;
        }
        if let Some(v) = self.lambda_max {
            params.lambda_max = v;
        }
        if let Some(v) = self.repair_hours {
            params.repair_hours = v;
        }
    }
}
