//! TCP front end: one thread and one independent session per connection.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread::JoinHandle;

use anyhow::Context;
use shoresim::config::RunConfig;
use shoresim::Environment;

use crate::protocol::Session;

/// Default bind address, overridable through this variable.
pub const ADDR_ENV: &str = "SHORESIM_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:7878";

pub struct ServerHandle {
    pub addr: SocketAddr,
    pub thread: JoinHandle<()>,
}

/// Binds `addr` and serves connections on a background thread.
pub fn spawn(
    addr: impl ToSocketAddrs,
    env: Arc<Environment>,
    cfg: Arc<RunConfig>,
) -> anyhow::Result<ServerHandle> {
    let listener = TcpListener::bind(addr).context("binding server address")?;
    let addr = listener.local_addr()?;
    let thread = std::thread::spawn(move || accept_loop(listener, env, cfg));
    Ok(ServerHandle { addr, thread })
}

/// Serves forever on the calling thread.
pub fn serve(
    addr: impl ToSocketAddrs,
    env: Arc<Environment>,
    cfg: Arc<RunConfig>,
) -> anyhow::Result<()> {
    let listener = TcpListener::bind(addr).context("binding server address")?;
    eprintln!("listening on {}", listener.local_addr()?);
    accept_loop(listener, env, cfg);
    Ok(())
}

fn accept_loop(listener: TcpListener, env: Arc<Environment>, cfg: Arc<RunConfig>) {
    for stream in listener.incoming() {
        let Ok(stream) = stream else { continue };
        let (env, cfg) = (env.clone(), cfg.clone());
        std::thread::spawn(move || {
            if let Err(e) = handle_connection(stream, env, &cfg) {
                eprintln!("connection ended: {e:#}");
            }
        });
    }
}

fn handle_connection(
    stream: TcpStream,
    env: Arc<Environment>,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    stream.set_nodelay(true)?;
    let mut session = Session::new(env, cfg)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        let response = match std::str::from_utf8(&buf) {
            Ok(line) if line.trim().is_empty() => continue,
            Ok(line) => session.handle_line(line.trim_end()),
            Err(_) => r#"{"ok":false,"error":"request is not valid UTF-8"}"#.to_string(),
        };
        writer.write_all(response.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if session.is_closed() {
            return Ok(());
        }
    }
}
