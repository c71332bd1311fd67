//! Deterministic 2D shore-following simulator for a differential-thrust
//! surface vessel, with lidar observation encoders, a shaped reward,
//! per-episode domain randomization and an MPPI baseline.

pub mod agents;
pub mod config;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod lidar;
pub mod mppi;
pub mod observations;
pub mod randomization;
pub mod reward;
pub mod world;

pub use dynamics::{DynamicsParams, ThrustCommand, VesselState};
pub use engine::{
    Agent, AgentView, EpisodeConfig, EpisodeLog, EpisodeMetrics, ShoreEnv, StepResult,
};
pub use error::{Result, SimError};
pub use world::Environment;
