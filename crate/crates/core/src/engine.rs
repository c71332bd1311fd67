//! Episodic loop: reset, 12 Hz stepping, termination, logging and metrics.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{advance, set_episode_physics, DynamicsParams, ThrustCommand, VesselState};
use crate::error::{Result, SimError};
use crate::lidar::{apply_noise, raycast_scan, LaserScan, LidarNoiseModel};
use crate::observations::{encode_observation, Observation, ObservationMode, ProjectionConfig};
use crate::randomization::{
    episode_rng, sample_episode_setup, DrConfig, EpisodeSetup, StreamPurpose,
};
use crate::reward::{compute_reward, RewardConfig, RewardTerms};
use crate::world::Environment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub max_steps: usize,
    pub control_hz: f64,
    pub physics_substeps: usize,
    /// m
    pub hull_radius: f64,
    /// m
    pub intervention_distance: f64,
    /// s
    pub intervention_grace: f64,
    pub observation_mode: ObservationMode,
    pub lidar_noise: LidarNoiseModel,
    pub projection: ProjectionConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            max_steps: 500,
            control_hz: 12.0,
            physics_substeps: 5,
            hull_radius: 0.7,
            intervention_distance: 25.0,
            intervention_grace: 10.0,
            observation_mode: ObservationMode::default(),
            lidar_noise: LidarNoiseModel::default(),
            projection: ProjectionConfig::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn control_dt(&self) -> f64 {
        1.0 / self.control_hz
    }

    /// Consecutive far-from-shore steps that trigger an intervention.
    pub fn intervention_steps(&self) -> usize {
        ((self.intervention_grace * self.control_hz) - 1e-9)
            .ceil()
            .max(1.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.into()));
        if self.max_steps == 0
            || self.control_hz.is_nan()
            || self.control_hz <= 0.0
            || self.physics_substeps == 0
        {
            return bad("max_steps, control_hz and physics_substeps must be positive");
        }
        if self.control_dt() / self.physics_substeps as f64 > 0.1 {
            return bad("physics step exceeds 0.1 s");
        }
        if !(self.hull_radius > 0.0 && self.intervention_distance > self.hull_radius) {
            return bad("hull radius and intervention distance must be positive and ordered");
        }
        self.lidar_noise.validate().map_err(SimError::InvalidConfig)
    }
}

/// Ground-truth diagnostics attached to every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Steps taken so far in the episode.
    pub step: usize,
    /// Simulated seconds since reset.
    pub time: f64,
    pub pose: VesselState,
    pub shore_distance: f64,
    pub surge: f64,
    pub collision: bool,
    pub intervention: bool,
    /// Episode ended by reaching the step limit.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub scan: LaserScan,
    pub reward: RewardTerms,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResetResult {
    pub observation: Observation,
    pub scan: LaserScan,
    pub setup: EpisodeSetup,
    pub info: StepInfo,
}

#[derive(Debug, Clone)]
struct Episode {
    setup: EpisodeSetup,
    params: DynamicsParams,
    state: VesselState,
    steps: usize,
    far_steps: usize,
    done: bool,
    noise_rng: ChaCha8Rng,
    scan: LaserScan,
}

/// One episode stream over a shared, immutable environment.
#[derive(Debug, Clone)]
pub struct ShoreEnv {
    env: Arc<Environment>,
    dr: DrConfig,
    cfg: EpisodeConfig,
    reward: RewardConfig,
    base_params: DynamicsParams,
    episode: Option<Episode>,
}

impl ShoreEnv {
    pub fn new(
        env: Arc<Environment>,
        dr: DrConfig,
        cfg: EpisodeConfig,
        reward: RewardConfig,
        base_params: DynamicsParams,
    ) -> Result<Self> {
        dr.validate()?;
        cfg.validate()?;
        reward.validate().map_err(SimError::InvalidConfig)?;
        base_params.validate().map_err(SimError::InvalidConfig)?;
        Ok(Self {
            env,
            dr,
            cfg,
            reward,
            base_params,
            episode: None,
        })
    }

    pub fn environment(&self) -> &Arc<Environment> {
        &self.env
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.cfg
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward
    }

    pub fn base_params(&self) -> &DynamicsParams {
        &self.base_params
    }

    /// Physics of the current episode, after randomization.
    pub fn params(&self) -> Option<&DynamicsParams> {
        self.episode.as_ref().map(|e| &e.params)
    }

    pub fn setup(&self) -> Option<&EpisodeSetup> {
        self.episode.as_ref().map(|e| &e.setup)
    }

    pub fn state(&self) -> Option<&VesselState> {
        self.episode.as_ref().map(|e| &e.state)
    }

    pub fn is_done(&self) -> bool {
        self.episode.as_ref().is_none_or(|e| e.done)
    }

    pub fn reset(&mut self, run_seed: u64, episode_index: u64) -> Result<ResetResult> {
        let setup = sample_episode_setup(run_seed, episode_index, &self.dr, &self.env)?;
        let params = set_episode_physics(&self.base_params, &setup);
        let state = VesselState::at_rest(setup.spawn.x, setup.spawn.y, setup.spawn.heading);
        let mut noise_rng = episode_rng(run_seed, episode_index, StreamPurpose::LidarNoise);
        let scan = self.sense(&state, &mut noise_rng);
        let observation =
            encode_observation(&scan, self.cfg.observation_mode, &self.cfg.projection)?;
        let shore_distance = self.env.nearest_shore(state.position()).distance;
        let info = StepInfo {
            step: 0,
            time: 0.0,
            pose: state,
            shore_distance,
            surge: 0.0,
            collision: false,
            intervention: false,
            truncated: false,
        };
        self.episode = Some(Episode {
            setup,
            params,
            state,
            steps: 0,
            far_steps: 0,
            done: false,
            noise_rng,
            scan: scan.clone(),
        });
        Ok(ResetResult {
            observation,
            scan,
            setup,
            info,
        })
    }

    fn sense(&self, state: &VesselState, rng: &mut ChaCha8Rng) -> LaserScan {
        let clean = raycast_scan(&self.env, state);
        apply_noise(&clean, &self.cfg.lidar_noise, rng)
    }

    pub fn step(&mut self, action: ThrustCommand) -> Result<StepResult> {
        let mut ep = self.episode.take().ok_or(SimError::NotReset)?;
        if ep.done {
            self.episode = Some(ep);
            return Err(SimError::EpisodeDone);
        }
        let action = ThrustCommand::new(action.left, action.right);
        ep.state = advance(
            &ep.state,
            action,
            &ep.params,
            self.cfg.control_dt(),
            self.cfg.physics_substeps,
        );
        ep.steps += 1;

        let p = ep.state.position();
        let in_water = ep.state.is_finite() && self.env.contains_water(p);
        let shore_distance = if in_water {
            self.env.nearest_shore(p).distance
        } else {
            0.0
        };
        let collision = !in_water || shore_distance < self.cfg.hull_radius;
        if shore_distance > self.cfg.intervention_distance {
            ep.far_steps += 1;
        } else {
            ep.far_steps = 0;
        }
        let intervention = !collision && ep.far_steps >= self.cfg.intervention_steps();
        let truncated = !collision && !intervention && ep.steps >= self.cfg.max_steps;
        ep.done = collision || intervention || truncated;

        let reward = compute_reward(shore_distance, ep.state.u, &self.reward);
        let scan = self.sense(&ep.state, &mut ep.noise_rng);
        let observation =
            encode_observation(&scan, self.cfg.observation_mode, &self.cfg.projection)?;
        ep.scan = scan.clone();
        let info = StepInfo {
            step: ep.steps,
            time: ep.steps as f64 * self.cfg.control_dt(),
            pose: ep.state,
            shore_distance,
            surge: ep.state.u,
            collision,
            intervention,
            truncated,
        };
        let done = ep.done;
        self.episode = Some(ep);
        Ok(StepResult {
            observation,
            scan,
            reward,
            done,
            info,
        })
    }

    /// Latest scan, before encoding.
    pub fn last_scan(&self) -> Option<&LaserScan> {
        self.episode.as_ref().map(|e| &e.scan)
    }
}

/// Everything a controller may look at when choosing an action. Learned
/// agents are expected to use only `observation`; model-based baselines
/// read the ground-truth fields.
#[derive(Debug, Clone, Copy)]
pub struct AgentView<'a> {
    pub observation: &'a Observation,
    pub scan: &'a LaserScan,
    pub state: &'a VesselState,
    pub environment: &'a Environment,
    pub params: &'a DynamicsParams,
    pub nominal_params: &'a DynamicsParams,
    pub episode: &'a EpisodeConfig,
    pub reward: &'a RewardConfig,
    pub step: usize,
}

pub trait Agent {
    fn name(&self) -> &str;

    /// Called after every reset with the agent's own random stream.
    fn begin_episode(&mut self, _rng: ChaCha8Rng) {}

    fn act(&mut self, view: &AgentView<'_>) -> Result<ThrustCommand>;
}

/// First line of an episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeHeader {
    pub run_seed: u64,
    pub episode: u64,
    pub environment: String,
    pub agent: String,
    pub control_hz: f64,
    pub setup: EpisodeSetup,
    pub initial_pose: VesselState,
}

/// One logged transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub time: f64,
    pub pose: VesselState,
    pub action: ThrustCommand,
    pub reward: RewardTerms,
    pub distance: f64,
    pub collision: bool,
    pub intervention: bool,
    pub done: bool,
    /// Scan observed after the transition.
    pub scan: Vec<f64>,
}

impl StepRecord {
    pub fn from_step(action: ThrustCommand, result: &StepResult) -> Self {
        Self {
            t: result.info.step,
            time: result.info.time,
            pose: result.info.pose,
            action,
            reward: result.reward,
            distance: result.info.shore_distance,
            collision: result.info.collision,
            intervention: result.info.intervention,
            done: result.done,
            scan: result.scan.ranges.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub header: EpisodeHeader,
    pub steps: Vec<StepRecord>,
}

impl EpisodeLog {
    /// Header line followed by one line per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = serde_json::from_str(lines.next().unwrap_or(""))?;
        let steps = lines
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, steps })
    }
}

/// Runs one full episode of `agent` in `sim`.
pub fn run_episode(
    sim: &mut ShoreEnv,
    agent: &mut dyn Agent,
    run_seed: u64,
    episode_index: u64,
) -> Result<EpisodeLog> {
    let reset = sim.reset(run_seed, episode_index)?;
    agent.begin_episode(episode_rng(run_seed, episode_index, StreamPurpose::Agent));
    let header = EpisodeHeader {
        run_seed,
        episode: episode_index,
        environment: sim.environment().name().to_string(),
        agent: agent.name().to_string(),
        control_hz: sim.config().control_hz,
        setup: reset.setup,
        initial_pose: reset.info.pose,
    };
    let mut observation = reset.observation;
    let mut scan = reset.scan;
    let mut state = reset.info.pose;
    let mut steps = Vec::with_capacity(sim.config().max_steps);
    loop {
        let params = *sim.params().expect("episode active");
        let action = {
            let view = AgentView {
                observation: &observation,
                scan: &scan,
                state: &state,
                environment: sim.environment(),
                params: &params,
                nominal_params: sim.base_params(),
                episode: sim.config(),
                reward: sim.reward_config(),
                step: steps.len(),
            };
            agent.act(&view)?
        };
        let result = sim.step(action)?;
        steps.push(StepRecord::from_step(
            ThrustCommand::new(action.left, action.right),
            &result,
        ));
        if result.done {
            break;
        }
        observation = result.observation;
        scan = result.scan;
        state = result.info.pose;
    }
    Ok(EpisodeLog { header, steps })
}

/// Summary statistics over one or more episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episodes: usize,
    pub steps: usize,
    pub sim_seconds: f64,
    pub collisions: usize,
    pub interventions: usize,
    pub collisions_per_10min: f64,
    pub interventions_per_10min: f64,
    pub vel_mean: f64,
    pub vel_std: f64,
    pub dist_mean: f64,
    pub dist_std: f64,
    pub distance_traveled: f64,
}

/// Metrics over every step of every log.
pub fn aggregate_metrics(logs: &[EpisodeLog]) -> Result<EpisodeMetrics> {
    aggregate_metrics_after(logs, 0)
}

/// Like [`aggregate_metrics`], but speed and distance statistics skip the
/// first `settle_steps` of each episode. Rates and distance traveled still
/// cover the whole episode.
pub fn aggregate_metrics_after(logs: &[EpisodeLog], settle_steps: usize) -> Result<EpisodeMetrics> {
    if logs.is_empty() {
        return Err(SimError::EmptyMetrics);
    }
    let mut steps = 0;
    let mut sim_seconds = 0.0;
    let mut collisions = 0;
    let mut interventions = 0;
    let mut traveled = 0.0;
    let mut vel = Vec::new();
    let mut dist = Vec::new();
    for log in logs {
        steps += log.steps.len();
        sim_seconds += log.steps.len() as f64 / log.header.control_hz;
        let mut prev = log.header.initial_pose.position();
        for (i, s) in log.steps.iter().enumerate() {
            collisions += s.collision as usize;
            interventions += s.intervention as usize;
            let p = s.pose.position();
            traveled += p.distance(prev);
            prev = p;
            if i >= settle_steps {
                vel.push(s.pose.u);
                dist.push(s.distance);
            }
        }
    }
    let (vel_mean, vel_std) = mean_std(&vel);
    let (dist_mean, dist_std) = mean_std(&dist);
    let per_10min = |n: usize| {
        if sim_seconds > 0.0 {
            n as f64 / (sim_seconds / 600.0)
        } else {
            0.0
        }
    };
    Ok(EpisodeMetrics {
        episodes: logs.len(),
        steps,
        sim_seconds,
        collisions,
        interventions,
        collisions_per_10min: per_10min(collisions),
        interventions_per_10min: per_10min(interventions),
        vel_mean,
        vel_std,
        dist_mean,
        dist_std,
        distance_traveled: traveled,
    })
}

/// Mean and population standard deviation; zeros for an empty slice.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
