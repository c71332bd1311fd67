//! Non-learned reference agents.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::ThrustCommand;
use crate::engine::{Agent, AgentView};
use crate::error::Result;
use crate::lidar::{beam_angle, LaserScan};
use crate::observations::{continuous_transform, ContinuousScan, POOL_STRIDE, TRIM_PER_SIDE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PdConfig {
    /// Common-mode command on both thrusters.
    pub cruise: f64,
    /// Turn command per metre of distance error.
    pub kp: f64,
    /// Turn command per m/s of range rate.
    pub kd: f64,
    /// Turn command per radian of bearing error from abeam.
    pub k_bearing: f64,
    pub max_turn: f64,
    /// m
    pub target_distance: f64,
    /// Turn command used while no shore is visible on port.
    pub search_turn: f64,
}

impl Default for PdConfig {
    fn default() -> Self {
        Self {
            cruise: 0.62,
            kp: 0.04,
            kd: 0.25,
            k_bearing: 0.5,
            max_turn: 0.35,
            target_distance: 10.0,
            search_turn: 0.08,
        }
    }
}

/// Bearing of continuous-scan bin `j`: midpoint of its two pooled beams.
pub fn bin_bearing(j: usize) -> f64 {
    let first = (j + TRIM_PER_SIDE) * POOL_STRIDE;
    0.5 * (beam_angle(first) + beam_angle(first + 1))
}

/// Nearest return on the port half of the scan as (range, bearing).
pub fn nearest_port_return(scan: &ContinuousScan) -> Option<(f64, f64)> {
    scan.values
        .iter()
        .enumerate()
        .filter(|&(j, _)| bin_bearing(j) >= 0.0)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(j, &v)| (1.0 / v, bin_bearing(j)))
        .filter(|&(r, _)| r <= crate::lidar::RANGE_MAX)
}

/// Keeps the shore on port at the target distance with a PD law on range
/// and a proportional term that pulls the nearest return abeam.
#[derive(Debug, Clone)]
pub struct ScriptedPd {
    cfg: PdConfig,
    prev_range: Option<f64>,
}

impl ScriptedPd {
    pub fn new(cfg: PdConfig) -> Self {
        Self {
            cfg,
            prev_range: None,
        }
    }

    /// Turn command for one scan; positive turns to port.
    pub fn turn(&mut self, scan: &ContinuousScan, dt: f64) -> f64 {
        let Some((range, bearing)) = nearest_port_return(scan) else {
            self.prev_range = None;
            return self.cfg.search_turn;
        };
        let rate = self.prev_range.map_or(0.0, |p| (range - p) / dt);
        self.prev_range = Some(range);
        let turn = self.cfg.kp * (range - self.cfg.target_distance)
            + self.cfg.kd * rate
            + self.cfg.k_bearing * (bearing - FRAC_PI_2);
        turn.clamp(-self.cfg.max_turn, self.cfg.max_turn)
    }

    pub fn command(&mut self, scan: &LaserScan, dt: f64) -> Result<ThrustCommand> {
        let cont = continuous_transform(scan)?;
        let turn = self.turn(&cont, dt);
        Ok(ThrustCommand::new(
            self.cfg.cruise - turn,
            self.cfg.cruise + turn,
        ))
    }
}

impl Agent for ScriptedPd {
    fn name(&self) -> &str {
        "scripted-pd"
    }

    fn begin_episode(&mut self, _rng: ChaCha8Rng) {
        self.prev_range = None;
    }

    fn act(&mut self, view: &AgentView<'_>) -> Result<ThrustCommand> {
        self.command(view.scan, view.episode.control_dt())
    }
}

/// Uniform random thrust on both channels.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl Default for RandomAgent {
    fn default() -> Self {
        Self {
            rng: rand::SeedableRng::seed_from_u64(0),
        }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> &str {
        "random"
    }

    fn begin_episode(&mut self, rng: ChaCha8Rng) {
        self.rng = rng;
    }

    fn act(&mut self, _view: &AgentView<'_>) -> Result<ThrustCommand> {
        Ok(ThrustCommand::new(
            self.rng.random_range(-1.0..=1.0),
            self.rng.random_range(-1.0..=1.0),
        ))
    }
}
