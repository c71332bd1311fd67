use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use clap::{Parser, Subcommand};
use shoresim::config::RunConfig;
use shoresim::mppi::MppiGrid;
use shoresim::EpisodeLog;
use shoresim_server::runner::{self, AgentKind};
use shoresim_server::{render, server};

#[derive(Parser)]
#[command(name = "shoresim", version, about = "Shore-following vessel simulator")]
struct Cli {
    /// Run configuration (JSON). Defaults apply to missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run episodes with a built-in or external agent.
    Run {
        #[arg(long, value_enum)]
        agent: AgentKind,
        #[arg(long, default_value_t = 1)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Shell command for `--agent external`.
        #[arg(long)]
        agent_cmd: Option<String>,
        /// Exclude this many leading seconds of each episode from the
        /// speed and distance statistics.
        #[arg(long, default_value_t = 0.0)]
        settle_seconds: f64,
    },
    /// Serve the environment over newline-delimited JSON on TCP.
    Serve {
        #[arg(long, env = server::ADDR_ENV, default_value = server::DEFAULT_ADDR)]
        addr: String,
    },
    /// Replay an episode log into PNG frames and a track table.
    Render {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep MPPI hyperparameters.
    Gridsearch {
        #[arg(long, default_value_t = 2)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid definition (JSON); a small default grid otherwise.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_dir(cli_out: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    cli_out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Cmd::Run {
            agent,
            episodes,
            seed,
            out,
            agent_cmd,
            settle_seconds,
        } => {
            anyhow::ensure!(episodes > 0, "--episodes must be positive");
            let env = Arc::new(cfg.environment.build()?);
            let mut agent = runner::make_agent(agent, &cfg, agent_cmd.as_deref())?;
            let logs = runner::run_episodes(&cfg, env, agent.as_mut(), seed, episodes)?;
            let dir = output_dir(out, &cfg);
            let settle = (settle_seconds * cfg.episode.control_hz).round() as usize;
            runner::write_outputs(&dir, &logs, settle)?;
            print!("{}", runner::metrics_csv(&logs, settle)?);
        }
        Cmd::Serve { addr } => {
            let env = Arc::new(cfg.environment.build()?);
            server::serve(addr, env, Arc::new(cfg))?;
        }
        Cmd::Render { log, out } => {
            let text = std::fs::read_to_string(&log)
                .with_context(|| format!("reading {}", log.display()))?;
            let log = EpisodeLog::from_jsonl(&text)?;
            let n = render::render_log(&log, &cfg.episode.projection, &out)?;
            println!("wrote {n} frames to {}", out.display());
        }
        Cmd::Gridsearch {
            episodes,
            seed,
            grid,
            out,
        } => {
            let grid: MppiGrid = match grid {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => MppiGrid::default(),
            };
            let env = Arc::new(cfg.environment.build()?);
            let rows = runner::grid_search(&cfg, env, &grid.configs(&cfg.mppi), seed, episodes)?;
            let text = runner::grid_csv(&rows)?;
            let dir = output_dir(out, &cfg);
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("gridsearch.csv"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}
