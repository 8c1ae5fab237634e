//! Out-of-process host runtimes over newline-delimited JSON.

mod client;
mod server;
pub mod wire;

use std::net::TcpListener;
use std::thread;

pub use client::{AdapterClient, Endpoint, DEFAULT_TIMEOUT};
pub use server::{Server, DEFAULT_ALLOW};

use crate::error::{BridgeError, ErrorKind, Result};
use crate::runtime::LocalRuntime;

/// Starts a server for a fresh [`LocalRuntime`] on a background thread,
/// listening on an ephemeral local port. Returns its `tcp:` endpoint.
pub fn spawn_loopback(allow: &'static [&'static str]) -> Result<Endpoint> {
    let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| BridgeError::host(ErrorKind::Io, e.to_string()))?;
    let addr = listener
        .local_addr()
        .map_err(|e| BridgeError::host(ErrorKind::Io, e.to_string()))?;
    thread::spawn(move || {
        let mut server = Server::new(LocalRuntime::new(), allow);
        let _ = server.serve_tcp(listener);
    });
    Ok(Endpoint::Tcp(addr.to_string()))
}

#[cfg(test)]
mod tests;
