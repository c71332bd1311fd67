//! Shore-following reward from the true shore distance and surge speed.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityTerm {
    /// `1 - |u - v_d|` for forward motion.
    #[default]
    Linear,
    /// `(v_d^2 - (u - v_d)^2) / v_d^2` for forward motion.
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// m/s
    pub target_speed: f64,
    /// m
    pub target_distance: f64,
    pub velocity_weight: f64,
    pub position_weight: f64,
    /// Magnitude of the velocity term while moving backward.
    pub backward_penalty: f64,
    pub position_floor: f64,
    /// Position term slope, 1/m.
    pub position_slope: f64,
    pub velocity_term: VelocityTerm,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            target_speed: 1.0,
            target_distance: 10.0,
            velocity_weight: 1.25,
            position_weight: 2.5,
            backward_penalty: 0.625,
            position_floor: -20.0,
            position_slope: 2.5,
            velocity_term: VelocityTerm::Linear,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.target_speed > 0.0 && self.target_distance > 0.0) {
            return Err("target speed and distance must be positive".into());
        }
        Ok(())
    }

    /// Best achievable total reward.
    pub fn max_reward(&self) -> f64 {
        self.velocity_weight + self.position_weight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardTerms {
    pub delta_p: f64,
    pub delta_v: f64,
    pub r_v: f64,
    pub r_p: f64,
    pub total: f64,
}

pub fn compute_reward(shore_distance: f64, surge: f64, cfg: &RewardConfig) -> RewardTerms {
    let delta_p = (shore_distance - cfg.target_distance).abs();
    let delta_v = (surge - cfg.target_speed).abs();
    let r_v = if surge < 0.0 {
        -cfg.backward_penalty
    } else {
        match cfg.velocity_term {
            VelocityTerm::Linear => 1.0 - delta_v,
            VelocityTerm::Quadratic => {
                let vd2 = cfg.target_speed * cfg.target_speed;
                (vd2 - delta_v * delta_v) / vd2
            }
        }
    };
    let r_p = cfg.position_floor.max(1.0 - cfg.position_slope * delta_p);
    RewardTerms {
        delta_p,
        delta_v,
        r_v,
        r_p,
        total: cfg.velocity_weight * r_v + cfg.position_weight * r_p,
    }
}
