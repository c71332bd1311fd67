//! Batch episode runs, metrics CSV and trajectory logs.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Arc;

use anyhow::{bail, Context};
use serde::Serialize;
use serde_json::json;
use shoresim::agents::{RandomAgent, ScriptedPd};
use shoresim::config::RunConfig;
use shoresim::engine::{aggregate_metrics_after, run_episode, EpisodeMetrics};
use shoresim::mppi::{MppiAgent, MppiConfig};
use shoresim::{Agent, AgentView, Environment, EpisodeLog, SimError, ThrustCommand};

use crate::protocol::observation_json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum AgentKind {
    Mppi,
    ScriptedPd,
    Random,
    External,
}

/// Agent living in a child process. Each step the child receives one JSON
/// line `{"step", "obs", "info"}` on stdin and answers with `[left, right]`.
pub struct ExternalAgent {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalAgent {
    pub fn spawn(command: &str) -> anyhow::Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .with_context(|| format!("starting agent command {command:?}"))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            child,
            stdin,
            stdout,
        })
    }

    fn exchange(&mut self, view: &AgentView<'_>) -> anyhow::Result<ThrustCommand> {
        let msg = json!({
            "step": view.step,
            "obs": observation_json(view.observation),
            "scan": view.scan.ranges,
        });
        writeln!(self.stdin, "{msg}")?;
        self.stdin.flush()?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            bail!("agent process closed its output");
        }
        let action: [f64; 2] =
            serde_json::from_str(line.trim()).context("agent reply must be [left, right]")?;
        Ok(ThrustCommand::from(action))
    }
}

impl Drop for ExternalAgent {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Agent for ExternalAgent {
    fn name(&self) -> &str {
        "external"
    }

    fn act(&mut self, view: &AgentView<'_>) -> shoresim::Result<ThrustCommand> {
        self.exchange(view)
            .map_err(|e| SimError::InvalidConfig(format!("external agent: {e:#}")))
    }
}

pub fn make_agent(
    kind: AgentKind,
    cfg: &RunConfig,
    agent_cmd: Option<&str>,
) -> anyhow::Result<Box<dyn Agent>> {
    Ok(match kind {
        AgentKind::Mppi => Box::new(MppiAgent::new(cfg.mppi)?),
        AgentKind::ScriptedPd => Box::new(ScriptedPd::new(cfg.pd)),
        AgentKind::Random => Box::new(RandomAgent::default()),
        AgentKind::External => {
            let cmd = agent_cmd.context("--agent external needs --agent-cmd")?;
            Box::new(ExternalAgent::spawn(cmd)?)
        }
    })
}

/// Runs episodes `0..episodes` under `seed`.
pub fn run_episodes(
    cfg: &RunConfig,
    env: Arc<Environment>,
    agent: &mut dyn Agent,
    seed: u64,
    episodes: u64,
) -> anyhow::Result<Vec<EpisodeLog>> {
    let mut sim = cfg.make_sim(env)?;
    (0..episodes)
        .map(|e| run_episode(&mut sim, agent, seed, e).map_err(Into::into))
        .collect()
}

#[derive(Debug, Serialize)]
struct MetricsRow {
    episode: String,
    steps: usize,
    collisions_per_10min: f64,
    interventions_per_10min: f64,
    vel_mean: f64,
    vel_std: f64,
    dist_mean: f64,
    dist_std: f64,
    distance_traveled: f64,
}

impl MetricsRow {
    fn new(episode: String, m: &EpisodeMetrics) -> Self {
        Self {
            episode,
            steps: m.steps,
            collisions_per_10min: m.collisions_per_10min,
            interventions_per_10min: m.interventions_per_10min,
            vel_mean: m.vel_mean,
            vel_std: m.vel_std,
            dist_mean: m.dist_mean,
            dist_std: m.dist_std,
            distance_traveled: m.distance_traveled,
        }
    }
}

/// One row per episode, then an `all` row aggregated over every step.
pub fn metrics_csv(logs: &[EpisodeLog], settle_steps: usize) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for log in logs {
        let m = aggregate_metrics_after(std::slice::from_ref(log), settle_steps)?;
        w.serialize(MetricsRow::new(log.header.episode.to_string(), &m))?;
    }
    w.serialize(MetricsRow::new(
        "all".into(),
        &aggregate_metrics_after(logs, settle_steps)?,
    ))?;
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn episode_log_path(dir: &Path, episode: u64) -> PathBuf {
    dir.join(format!("episode_{episode:04}.jsonl"))
}

/// Writes `metrics.csv` and one JSONL log per episode into `dir`.
pub fn write_outputs(dir: &Path, logs: &[EpisodeLog], settle_steps: usize) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("metrics.csv"), metrics_csv(logs, settle_steps)?)?;
    for log in logs {
        fs::write(episode_log_path(dir, log.header.episode), log.to_jsonl())?;
    }
    Ok(())
}

/// Mean reward per step over all logs.
pub fn mean_reward(logs: &[EpisodeLog]) -> f64 {
    let (sum, n) = logs
        .iter()
        .flat_map(|l| &l.steps)
        .fold((0.0, 0usize), |(s, n), r| (s + r.reward.total, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Serialize)]
pub struct GridRow {
    pub samples: usize,
    pub horizon: usize,
    pub lambda: f64,
    pub noise_sigma: f64,
    pub mean_reward: f64,
    pub collisions_per_10min: f64,
    pub interventions_per_10min: f64,
    pub vel_mean: f64,
    pub dist_mean: f64,
    pub dist_std: f64,
}

/// Evaluates every MPPI configuration on the same episodes, best first.
pub fn grid_search(
    cfg: &RunConfig,
    env: Arc<Environment>,
    candidates: &[MppiConfig],
    seed: u64,
    episodes: u64,
) -> anyhow::Result<Vec<GridRow>> {
    let mut rows = Vec::new();
    for c in candidates {
        let mut agent = MppiAgent::new(*c)?;
        let logs = run_episodes(cfg, env.clone(), &mut agent, seed, episodes)?;
        let m = aggregate_metrics_after(&logs, 0)?;
        rows.push(GridRow {
            samples: c.samples,
            horizon: c.horizon,
            lambda: c.lambda,
            noise_sigma: c.noise_sigma,
            mean_reward: mean_reward(&logs),
            collisions_per_10min: m.collisions_per_10min,
            interventions_per_10min: m.interventions_per_10min,
            vel_mean: m.vel_mean,
            dist_mean: m.dist_mean,
            dist_std: m.dist_std,
        });
    }
    rows.sort_by(|a, b| b.mean_reward.total_cmp(&a.mean_reward));
    Ok(rows)
}

pub fn grid_csv(rows: &[GridRow]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}
