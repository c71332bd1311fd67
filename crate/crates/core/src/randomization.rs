//! Per-episode domain randomization and the seeded random streams.
//!
//! Every random draw in a run comes from ChaCha8 (`rand_chacha`). The key is
//! expanded from the 64-bit run seed with `SeedableRng::seed_from_u64`
//! (PCG32 expansion, as documented in `rand_core`), and each consumer gets
//! its own 64-bit stream id `(episode_index << 8) | purpose`. Clients in other
//! languages can reproduce any stream from those three numbers.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::world::{sample_spawn, Environment, SpawnPolicy, SpawnPose};

/// What a random stream is used for; the low byte of the stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamPurpose {
    Setup = 0,
    LidarNoise = 1,
    Agent = 2,
}

pub fn episode_rng(run_seed: u64, episode_index: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream((episode_index << 8) | purpose as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpawnPreset {
    #[default]
    Moderate,
    Aggressive,
}

impl SpawnPreset {
    pub fn policy(self) -> SpawnPolicy {
        match self {
            SpawnPreset::Moderate => SpawnPolicy::moderate(),
            SpawnPreset::Aggressive => SpawnPolicy::aggressive(),
        }
    }
}

/// Pose used instead of sampling when set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedSpawn {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DrConfig {
    pub randomize_current: bool,
    /// m/s
    pub current_speed_range: [f64; 2],
    pub randomize_density: bool,
    /// kg/m^3
    pub density_range: [f64; 2],
    pub randomize_spawn: bool,
    pub spawn_policy: SpawnPreset,
    pub fixed_spawn: Option<FixedSpawn>,
}

impl Default for DrConfig {
    fn default() -> Self {
        Self {
            randomize_current: true,
            current_speed_range: [0.0, 0.4],
            randomize_density: true,
            density_range: [1000.0, 2500.0],
            randomize_spawn: true,
            spawn_policy: SpawnPreset::Moderate,
            fixed_spawn: None,
        }
    }
}

impl DrConfig {
    /// Nominal physics and the moderate spawn policy.
    pub fn disabled() -> Self {
        Self {
            randomize_current: false,
            randomize_density: false,
            randomize_spawn: false,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !ordered(self.current_speed_range) || self.current_speed_range[0] < 0.0 {
            return Err(SimError::InvalidConfig(
                "current speed range must be ordered and non-negative".into(),
            ));
        }
        if !ordered(self.density_range) || self.density_range[0] <= 0.0 {
            return Err(SimError::InvalidConfig(
                "density range must be ordered and positive".into(),
            ));
        }
        Ok(())
    }

    fn spawn_policy(&self) -> SpawnPolicy {
        if self.randomize_spawn {
            self.spawn_policy.policy()
        } else {
            SpawnPolicy::moderate()
        }
    }
}

pub const NOMINAL_DENSITY: f64 = 1000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSetup {
    /// World-frame water current, m/s.
    pub current: [f64; 2],
    /// kg/m^3
    pub water_density: f64,
    pub spawn: SpawnPose,
    pub run_seed: u64,
    pub episode_index: u64,
}

/// Draws the setup for one episode from its dedicated stream.
pub fn sample_episode_setup(
    run_seed: u64,
    episode_index: u64,
    cfg: &DrConfig,
    env: &Environment,
) -> Result<EpisodeSetup> {
    let mut rng = episode_rng(run_seed, episode_index, StreamPurpose::Setup);
    let mut setup = sample_setup_with(&mut rng, cfg, env)?;
    setup.run_seed = run_seed;
    setup.episode_index = episode_index;
    Ok(setup)
}

/// Draw order is fixed: current speed, current direction, density, spawn.
/// Disabled dimensions still consume their draws so enabling one dimension
/// never shifts another's values.
pub fn sample_setup_with<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &DrConfig,
    env: &Environment,
) -> Result<EpisodeSetup> {
    cfg.validate()?;
    let speed = rng.random_range(cfg.current_speed_range[0]..=cfg.current_speed_range[1]);
    let direction = rng.random_range(0.0..TAU);
    let density = rng.random_range(cfg.density_range[0]..=cfg.density_range[1]);

    let current = if cfg.randomize_current {
        let (s, c) = direction.sin_cos();
        [speed * c, speed * s]
    } else {
        [0.0, 0.0]
    };
    let water_density = if cfg.randomize_density {
        density
    } else {
        NOMINAL_DENSITY
    };
    let spawn = match cfg.fixed_spawn {
        Some(f) => SpawnPose {
            x: f.x,
            y: f.y,
            heading: f.heading,
            shore_distance_at_spawn: env
                .nearest_shore(crate::geometry::Vec2::new(f.x, f.y))
                .distance,
        },
        None => sample_spawn(env, rng, &cfg.spawn_policy())?,
    };
    Ok(EpisodeSetup {
        current,
        water_density,
        spawn,
        run_seed: 0,
        episode_index: 0,
    })
}
