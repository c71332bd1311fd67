//! Minimal blocking client for the wire protocol.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpStream, ToSocketAddrs};

use anyhow::{anyhow, bail, Context};
use serde_json::{json, Value};
use shoresim::engine::{StepInfo, StepRecord};
use shoresim::lidar::LaserScan;
use shoresim::randomization::EpisodeSetup;
use shoresim::reward::RewardTerms;
use shoresim::ThrustCommand;

use crate::protocol::PROTOCOL_VERSION;

pub struct RemoteEnv {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    pub hello: Value,
}

impl RemoteEnv {
    /// Connects and performs the handshake, asking for raw scans.
    pub fn connect(addr: impl ToSocketAddrs) -> anyhow::Result<Self> {
        let stream = TcpStream::connect(addr).context("connecting to server")?;
        stream.set_nodelay(true)?;
        let mut env = Self {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
            hello: Value::Null,
        };
        env.hello =
            env.request(&json!({ "cmd": "hello", "version": PROTOCOL_VERSION, "raw_scan": true }))?;
        Ok(env)
    }

    /// Sends a raw line and returns the raw response line.
    pub fn send_line(&mut self, line: &str) -> anyhow::Result<String> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut response = String::new();
        if self.reader.read_line(&mut response)? == 0 {
            bail!("server closed the connection");
        }
        Ok(response.trim_end().to_string())
    }

    /// Sends a request; a response with `ok: false` becomes an error.
    pub fn request(&mut self, req: &Value) -> anyhow::Result<Value> {
        let response: Value = serde_json::from_str(&self.send_line(&req.to_string())?)?;
        if response["ok"] != Value::Bool(true) {
            return Err(anyhow!("server error: {}", response["error"]));
        }
        Ok(response)
    }

    pub fn reset(&mut self, seed: u64, episode: u64) -> anyhow::Result<Value> {
        self.request(&json!({ "cmd": "reset", "seed": seed, "episode": episode }))
    }

    pub fn step(&mut self, action: ThrustCommand) -> anyhow::Result<Value> {
        self.request(&json!({ "cmd": "step", "action": [action.left, action.right] }))
    }

    pub fn close(mut self) -> anyhow::Result<()> {
        self.request(&json!({ "cmd": "close" })).map(|_| ())
    }
}

fn scan_of(v: &Value) -> anyhow::Result<LaserScan> {
    Ok(LaserScan::new(
        serde_json::from_value(v["scan"].clone()).context("response lacks raw scan")?,
    ))
}

/// Drives one episode over the wire with a scan-based policy and rebuilds
/// the step records from the responses.
pub fn run_remote_episode(
    remote: &mut RemoteEnv,
    seed: u64,
    episode: u64,
    mut policy: impl FnMut(&LaserScan) -> anyhow::Result<ThrustCommand>,
) -> anyhow::Result<(EpisodeSetup, Vec<StepRecord>)> {
    let reset = remote.reset(seed, episode)?;
    let setup: EpisodeSetup = serde_json::from_value(reset["setup"].clone())?;
    let mut scan = scan_of(&reset)?;
    let mut records = Vec::new();
    loop {
        let action = policy(&scan)?;
        let r = remote.step(action)?;
        let info: StepInfo = serde_json::from_value(r["info"].clone())?;
        let reward: RewardTerms = serde_json::from_value(r["reward"].clone())?;
        scan = scan_of(&r)?;
        let done = r["done"].as_bool().unwrap_or(false);
        records.push(StepRecord {
            t: info.step,
            time: info.time,
            pose: info.pose,
            action,
            reward,
            distance: info.shore_distance,
            collision: info.collision,
            intervention: info.intervention,
            done,
            scan: scan.ranges.clone(),
        });
        if done {
            return Ok((setup, records));
        }
    }
}
