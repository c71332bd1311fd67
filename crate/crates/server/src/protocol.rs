//! Newline-delimited JSON protocol and the per-connection session state.
//!
//! Requests carry a `cmd` field: `hello`, `reset`, `step` or `close`.
//! Every request gets exactly one response object with an `ok` field;
//! failures add an `error` string and leave the session usable.

use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use shoresim::config::RunConfig;
use shoresim::observations::Observation;
use shoresim::{Environment, ShoreEnv, ThrustCommand};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
enum Request {
    Hello {
        #[serde(default)]
        version: Option<u32>,
        /// Include the raw 540-beam scan in reset and step responses.
        #[serde(default)]
        raw_scan: bool,
    },
    Reset {
        seed: u64,
        #[serde(default)]
        episode: u64,
    },
    Step {
        action: [f64; 2],
    },
    Close,
}

/// Observation payload: `continuous` is the 256-value scan, `projection`
/// carries base64 raw RGB bytes, row-major.
pub fn observation_json(obs: &Observation) -> Value {
    let mut out = Map::new();
    if let Some(c) = &obs.continuous {
        out.insert("continuous".into(), json!(c.values));
    }
    if let Some(p) = &obs.projection {
        out.insert(
            "projection".into(),
            json!({ "width": p.width, "height": p.height, "rgb": BASE64.encode(&p.pixels) }),
        );
    }
    Value::Object(out)
}

fn error(msg: impl std::fmt::Display) -> Value {
    json!({ "ok": false, "error": msg.to_string() })
}

/// One client's episode stream. Usable in-process or behind a socket.
pub struct Session {
    sim: ShoreEnv,
    raw_scan: bool,
    closed: bool,
}

impl Session {
    pub fn new(env: Arc<Environment>, cfg: &RunConfig) -> shoresim::Result<Self> {
        Ok(Self {
            sim: cfg.make_sim(env)?,
            raw_scan: false,
            closed: false,
        })
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Handles one request line and returns the response line, without the
    /// trailing newline.
    pub fn handle_line(&mut self, line: &str) -> String {
        let value = match serde_json::from_str::<Value>(line) {
            Ok(v) => v,
            Err(e) => return error(format!("malformed JSON: {e}")).to_string(),
        };
        let response = match serde_json::from_value::<Request>(value) {
            Ok(req) => self.handle(req),
            Err(e) => error(format!("bad request: {e}")),
        };
        response.to_string()
    }

    fn handle(&mut self, req: Request) -> Value {
        match req {
            Request::Hello { version, raw_scan } => {
                if let Some(v) = version.filter(|&v| v != PROTOCOL_VERSION) {
                    return error(format!(
                        "unsupported protocol version {v}; server speaks {PROTOCOL_VERSION}"
                    ));
                }
                self.raw_scan = raw_scan;
                let cfg = self.sim.config();
                json!({
                    "ok": true,
                    "version": PROTOCOL_VERSION,
                    "obs_mode": cfg.observation_mode,
                    "environment": self.sim.environment().name(),
                    "max_steps": cfg.max_steps,
                    "control_hz": cfg.control_hz,
                })
            }
            Request::Reset { seed, episode } => match self.sim.reset(seed, episode) {
                Ok(r) => {
                    let mut out = json!({
                        "ok": true,
                        "obs": observation_json(&r.observation),
                        "setup": r.setup,
                        "info": r.info,
                    });
                    if self.raw_scan {
                        out["scan"] = json!(r.scan.ranges);
                    }
                    out
                }
                Err(e) => error(e),
            },
            Request::Step { action } => match self.sim.step(ThrustCommand::from(action)) {
                Ok(r) => {
                    let mut out = json!({
                        "ok": true,
                        "obs": observation_json(&r.observation),
                        "reward": r.reward,
                        "done": r.done,
                        "info": r.info,
                    });
                    if self.raw_scan {
                        out["scan"] = json!(r.scan.ranges);
                    }
                    out
                }
                Err(e) => error(e),
            },
            Request::Close => {
                self.closed = true;
                json!({ "ok": true })
            }
        }
    }
}
