//! Model predictive path integral controller over the vessel model.
//!
//! Each tick samples `K` Gaussian perturbations of the nominal plan, rolls
//! them out through [`advance`], and moves the plan toward the low-cost
//! samples with weights `exp(-(S_k - min S) / lambda)`. Sample 0 is always
//! the unperturbed nominal plan.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{advance, DynamicsParams, ThrustCommand, VesselState};
use crate::engine::{Agent, AgentView, EpisodeConfig};
use crate::error::{Result, SimError};
use crate::reward::{compute_reward, RewardConfig};
use crate::world::Environment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MppiConfig {
    pub samples: usize,
    /// Steps at the control rate.
    pub horizon: usize,
    pub lambda: f64,
    /// Per-channel std of the action perturbation.
    pub noise_sigma: f64,
    pub collision_cost: f64,
    pub warm_start: bool,
    /// Plan with the episode's randomized physics instead of the nominal ones.
    pub perfect_model: bool,
}

impl Default for MppiConfig {
    fn default() -> Self {
        Self {
            samples: 512,
            horizon: 24,
            lambda: 0.5,
            noise_sigma: 0.3,
            collision_cost: 500.0,
            warm_start: true,
            perfect_model: true,
        }
    }
}

impl MppiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2
            || self.horizon < 1
            || self.lambda.is_nan()
            || self.lambda <= 0.0
            || self.noise_sigma.is_nan()
            || self.noise_sigma <= 0.0
        {
            return Err(SimError::InvalidConfig(
                "MPPI needs K >= 2, H >= 1, lambda > 0, sigma > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPlan {
    pub commands: Vec<ThrustCommand>,
}

impl ControlPlan {
    pub fn constant(cmd: ThrustCommand, horizon: usize) -> Self {
        Self {
            commands: vec![ThrustCommand::new(cmd.left, cmd.right); horizon],
        }
    }

    /// Drops the first command and repeats the last.
    pub fn shifted(&self) -> Self {
        let mut commands: Vec<_> = self.commands.iter().skip(1).copied().collect();
        if let Some(&last) = self.commands.last() {
            commands.push(last);
        }
        Self { commands }
    }
}

/// Everything a rollout needs besides the action sequence.
#[derive(Debug, Clone, Copy)]
pub struct RolloutModel<'a> {
    pub environment: &'a Environment,
    pub params: &'a DynamicsParams,
    pub control_dt: f64,
    pub substeps: usize,
    pub hull_radius: f64,
    pub reward: &'a RewardConfig,
    pub collision_cost: f64,
}

impl<'a> RolloutModel<'a> {
    pub fn new(
        environment: &'a Environment,
        params: &'a DynamicsParams,
        episode: &EpisodeConfig,
        reward: &'a RewardConfig,
        collision_cost: f64,
    ) -> Self {
        Self {
            environment,
            params,
            control_dt: episode.control_dt(),
            substeps: episode.physics_substeps,
            hull_radius: episode.hull_radius,
            reward,
            collision_cost,
        }
    }
}

/// Sum of negated rewards along the rollout. A step inside the hull radius
/// adds `collision_cost` and ends the accumulation. Non-finite states give
/// an infinite cost.
pub fn rollout_cost(
    state: &VesselState,
    commands: &[ThrustCommand],
    model: &RolloutModel<'_>,
) -> f64 {
    let mut s = *state;
    let mut cost = 0.0;
    for &cmd in commands {
        s = advance(&s, cmd, model.params, model.control_dt, model.substeps);
        if !s.is_finite() {
            return f64::INFINITY;
        }
        let d = model.environment.nearest_shore(s.position()).distance;
        if d < model.hull_radius {
            return cost + model.collision_cost;
        }
        cost -= compute_reward(d, s.u, model.reward).total;
    }
    cost
}

/// Normalized path-integral weights. Non-finite costs get zero weight.
pub fn importance_weights(costs: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let min = costs
        .iter()
        .copied()
        .filter(|c| c.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(SimError::ModelBlowUp(costs.len()));
    }
    let raw: Vec<f64> = costs
        .iter()
        .map(|&c| {
            if c.is_finite() {
                (-(c - min) / lambda).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MppiDiagnostics {
    pub min_cost: f64,
    pub mean_cost: f64,
    /// `1 / sum(w^2)`
    pub effective_samples: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MppiOutput {
    pub command: ThrustCommand,
    /// Updated plan, before shifting.
    pub updated: ControlPlan,
    /// Plan to start the next tick from.
    pub next: ControlPlan,
    pub diagnostics: MppiDiagnostics,
}

/// One MPPI update. Noise is drawn sequentially from `rng` so results do not
/// depend on the thread count; rollouts run in parallel.
pub fn mppi_step<R: Rng + ?Sized>(
    state: &VesselState,
    plan: &ControlPlan,
    model: &RolloutModel<'_>,
    cfg: &MppiConfig,
    rng: &mut R,
) -> Result<MppiOutput> {
    let h = plan.commands.len();
    let k = cfg.samples;
    let mut noise = vec![0.0f64; k * h * 2];
    for x in noise.iter_mut().skip(h * 2) {
        let z: f64 = StandardNormal.sample(rng);
        *x = cfg.noise_sigma * z;
    }
    // Perturbed sequences are clamped; keep the clamped offsets.
    let mut sequences = vec![ThrustCommand::default(); k * h];
    for i in 0..k {
        for t in 0..h {
            let nom = plan.commands[t];
            let e = &mut noise[(i * h + t) * 2..(i * h + t) * 2 + 2];
            let cmd = ThrustCommand::new(nom.left + e[0], nom.right + e[1]);
            e[0] = cmd.left - nom.left;
            e[1] = cmd.right - nom.right;
            sequences[i * h + t] = cmd;
        }
    }
    let costs: Vec<f64> = sequences
        .par_chunks(h.max(1))
        .map(|seq| rollout_cost(state, seq, model))
        .collect();
    let weights = importance_weights(&costs, cfg.lambda)?;

    let mut commands = plan.commands.clone();
    for (t, cmd) in commands.iter_mut().enumerate() {
        let (mut dl, mut dr) = (0.0, 0.0);
        for (i, &w) in weights.iter().enumerate() {
            let e = &noise[(i * h + t) * 2..(i * h + t) * 2 + 2];
            dl += w * e[0];
            dr += w * e[1];
        }
        *cmd = ThrustCommand::new(cmd.left + dl, cmd.right + dr);
    }
    let updated = ControlPlan { commands };
    let next = if cfg.warm_start {
        updated.shifted()
    } else {
        ControlPlan::constant(ThrustCommand::default(), h)
    };
    let finite: Vec<f64> = costs.iter().copied().filter(|c| c.is_finite()).collect();
    let diagnostics = MppiDiagnostics {
        min_cost: finite.iter().copied().fold(f64::INFINITY, f64::min),
        mean_cost: finite.iter().sum::<f64>() / finite.len() as f64,
        effective_samples: 1.0 / weights.iter().map(|w| w * w).sum::<f64>(),
    };
    Ok(MppiOutput {
        command: updated.commands.first().copied().unwrap_or_default(),
        updated,
        next,
        diagnostics,
    })
}

/// State-aware MPPI baseline. Reads the true state, shoreline and physics.
#[derive(Debug, Clone)]
pub struct MppiAgent {
    cfg: MppiConfig,
    plan: ControlPlan,
    rng: ChaCha8Rng,
    last: Option<MppiDiagnostics>,
}

impl MppiAgent {
    pub fn new(cfg: MppiConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            plan: ControlPlan::constant(ThrustCommand::default(), cfg.horizon),
            cfg,
            rng: rand::SeedableRng::seed_from_u64(0),
            last: None,
        })
    }

    pub fn config(&self) -> &MppiConfig {
        &self.cfg
    }

    pub fn last_diagnostics(&self) -> Option<MppiDiagnostics> {
        self.last
    }
}

impl Agent for MppiAgent {
    fn name(&self) -> &str {
        "mppi"
    }

    fn begin_episode(&mut self, rng: ChaCha8Rng) {
        self.rng = rng;
        self.plan = ControlPlan::constant(ThrustCommand::default(), self.cfg.horizon);
        self.last = None;
    }

    fn act(&mut self, view: &AgentView<'_>) -> Result<ThrustCommand> {
        let params = if self.cfg.perfect_model {
            view.params
        } else {
            view.nominal_params
        };
        let model = RolloutModel::new(
            view.environment,
            params,
            view.episode,
            view.reward,
            self.cfg.collision_cost,
        );
        let out = mppi_step(view.state, &self.plan, &model, &self.cfg, &mut self.rng)?;
        self.plan = out.next;
        self.last = Some(out.diagnostics);
        Ok(out.command)
    }
}

/// Cartesian product of candidate hyperparameters for a grid search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MppiGrid {
    pub samples: Vec<usize>,
    pub horizon: Vec<usize>,
    pub lambda: Vec<f64>,
    pub noise_sigma: Vec<f64>,
}

impl Default for MppiGrid {
    fn default() -> Self {
        Self {
            samples: vec![256, 512],
            horizon: vec![12, 24],
            lambda: vec![0.25, 0.5, 1.0],
            noise_sigma: vec![0.2, 0.3],
        }
    }
}

impl MppiGrid {
    pub fn configs(&self, base: &MppiConfig) -> Vec<MppiConfig> {
        let mut out = Vec::new();
        for &samples in &self.samples {
            for &horizon in &self.horizon {
                for &lambda in &self.lambda {
                    for &noise_sigma in &self.noise_sigma {
                        out.push(MppiConfig {
                            samples,
                            horizon,
                            lambda,
                            noise_sigma,
                            ..*base
                        });
                    }
                }
            }
        }
        out
    }
}
