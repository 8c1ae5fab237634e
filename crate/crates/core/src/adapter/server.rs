//! A wire server in front of a [`LocalRuntime`], restricted to an allow-list
//! of modules.

use std::io::{self, BufRead, Write};
use std::net::TcpListener;

use serde_json::{json, Value};

use super::wire::{from_wire, to_wire, Op, Request, Response, PROTOCOL_VERSION};
use crate::error::{BridgeError, ErrorKind, Result};
use crate::host::{HostValue, ObjectHandle};
use crate::runtime::{HostRuntime, Kwargs, LocalRuntime};

pub const DEFAULT_ALLOW: &[&str] = &["json", "math", "jns_demo"];

fn protocol_error(message: impl Into<String>) -> BridgeError {
    BridgeError::host(ErrorKind::Other("ProtocolError".into()), message)
}

pub struct Server {
    runtime: LocalRuntime,
    allow: Vec<String>,
    last_id: Option<u64>,
}

impl Server {
    pub fn new(runtime: LocalRuntime, allow: &[&str]) -> Server {
        Server {
            runtime,
            allow: allow.iter().map(|s| s.to_string()).collect(),
            last_id: None,
        }
    }

    pub fn live_count(&self) -> usize {
        self.runtime.live_count()
    }

    /// Answers one request line. Never fails: every problem becomes an
    /// error response.
    pub fn handle_line(&mut self, line: &str) -> Response {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                let id = serde_json::from_str::<Value>(line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(Value::as_u64))
                    .unwrap_or(0);
                return Response::err(id, &protocol_error(format!("bad request: {e}")));
            }
        };
        let id = req.id;
        if self.last_id.is_some_and(|last| id <= last) {
            return Response::err(id, &protocol_error(format!("request id {id} does not increase")));
        }
        self.last_id = Some(id);
        self.runtime.clear_error();
        match self.dispatch(req) {
            Ok(v) => Response::ok(id, v),
            Err(e) => Response::err(id, &e),
        }
    }

    fn dispatch(&mut self, req: Request) -> Result<Value> {
        let args = req.args.iter().map(from_wire).collect::<Result<Vec<_>>>()?;
        let mut kwargs = Kwargs::new();
        for (k, v) in &req.kwargs {
            kwargs.insert(k.clone(), from_wire(v)?);
        }
        let handle = || -> Result<ObjectHandle> {
            let text = req.handle.as_deref().ok_or_else(|| protocol_error("missing handle"))?;
            ObjectHandle::parse(text).ok_or_else(|| protocol_error(format!("malformed handle '{text}'")))
        };
        let name = || req.name.as_deref().ok_or_else(|| protocol_error("missing name"));
        let value = match req.op {
            Op::Ping => {
                return Ok(json!({"t": "map", "v": [
                    [{"t": "s", "v": "protocol"}, {"t": "s", "v": PROTOCOL_VERSION}],
                    [{"t": "s", "v": "live"}, {"t": "i", "v": self.runtime.live_count()}],
                ]}))
            }
            Op::Call => {
                let module = req.module.as_deref().ok_or_else(|| protocol_error("missing module"))?;
                if !self.allow.iter().any(|m| m == module) {
                    return Err(BridgeError::host(
                        ErrorKind::ModuleNotAllowed,
                        format!("module '{module}' is not allowed"),
                    ));
                }
                match &req.name {
                    None => {
                        self.runtime.load_module(module)?;
                        HostValue::Null
                    }
                    Some(name) => self.runtime.call(module, name, args, kwargs)?,
                }
            }
            Op::Method => self.runtime.call_method(handle()?, name()?, args, kwargs)?,
            Op::Getattr => self.runtime.get_attribute(handle()?, name()?)?,
            Op::Release => {
                self.runtime.release(handle()?)?;
                HostValue::Null
            }
        };
        Ok(to_wire(&value))
    }

    /// Serves one connection until end of input.
    pub fn serve<R: BufRead, W: Write>(&mut self, reader: R, mut writer: W) -> io::Result<()> {
        self.last_id = None;
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let resp = self.handle_line(&line);
            let mut text = serde_json::to_string(&resp).map_err(io::Error::other)?;
            text.push('\n');
            writer.write_all(text.as_bytes())?;
            writer.flush()?;
        }
        Ok(())
    }

    /// Serves TCP connections one after another.
    pub fn serve_tcp(&mut self, listener: TcpListener) -> io::Result<()> {
        for stream in listener.incoming() {
            let stream = stream?;
            stream.set_nodelay(true)?;
            let reader = io::BufReader::new(stream.try_clone()?);
            if let Err(e) = self.serve(reader, stream) {
                eprintln!("connection closed: {e}");
            }
        }
        Ok(())
    }
}
