//! Serializable description of a complete run.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::PdConfig;
use crate::dynamics::DynamicsParams;
use crate::engine::{EpisodeConfig, ShoreEnv};
use crate::error::{Result, SimError};
use crate::mppi::MppiConfig;
use crate::randomization::DrConfig;
use crate::reward::RewardConfig;
use crate::world::{generate_channel, generate_lake, ChannelSpec, Environment, LakeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentSpec {
    Lake {
        seed: u64,
        #[serde(default)]
        spec: LakeSpec,
    },
    Channel {
        seed: u64,
        #[serde(default)]
        spec: ChannelSpec,
    },
    Circle {
        radius: f64,
    },
    Rectangle {
        width: f64,
        height: f64,
    },
}

impl Default for EnvironmentSpec {
    fn default() -> Self {
        EnvironmentSpec::Lake {
            seed: 0,
            spec: LakeSpec::default(),
        }
    }
}

impl EnvironmentSpec {
    pub fn build(&self) -> Result<Environment> {
        match self {
            EnvironmentSpec::Lake { seed, spec } => generate_lake(*seed, spec),
            EnvironmentSpec::Channel { seed, spec } => generate_channel(*seed, spec),
            EnvironmentSpec::Circle { radius } => Environment::circle(*radius),
            EnvironmentSpec::Rectangle { width, height } => Environment::rectangle(*width, *height),
        }
    }
}

/// A run is reproducible from this plus the run seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub environment: EnvironmentSpec,
    pub domain_randomization: DrConfig,
    pub episode: EpisodeConfig,
    pub reward: RewardConfig,
    pub dynamics: DynamicsParams,
    pub mppi: MppiConfig,
    pub pd: PdConfig,
    /// Directory for metrics and trajectory logs.
    pub output_dir: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn make_sim(&self, env: Arc<Environment>) -> Result<ShoreEnv> {
        self.mppi.validate()?;
        ShoreEnv::new(
            env,
            self.domain_randomization.clone(),
            self.episode,
            self.reward,
            self.dynamics,
        )
    }
}
