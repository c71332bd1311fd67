//! Environment server, wire client and batch tooling around `shoresim`.

pub mod client;
pub mod protocol;
pub mod render;
pub mod runner;
pub mod server;
