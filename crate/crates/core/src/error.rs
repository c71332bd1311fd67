use thiserror::Error;

use crate::geometry::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("point ({}, {}) is not inside the water region", .0.x, .0.y)]
    OutsideWater(Vec2),
    #[error("shoreline generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },
    #[error("no valid spawn pose found in {tries} tries")]
    SpawnFailed { tries: usize },
    #[error("laser scan has {got} beams, expected {expected}")]
    ScanLength { expected: usize, got: usize },
    #[error("no active episode; call reset first")]
    NotReset,
    #[error("episode is done; call reset to start a new one")]
    EpisodeDone,
    #[error("cannot aggregate metrics over zero episodes")]
    EmptyMetrics,
    #[error("all {0} MPPI rollouts produced non-finite costs")]
    ModelBlowUp(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
