//! A [`HostRuntime`] that forwards every operation to a wire server.

use std::collections::HashSet;
use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde_json::Value;

use super::wire::{from_wire, to_wire, Op, Request, Response, PROTOCOL_VERSION};
use crate::error::{BridgeError, ErrorKind, Result};
use crate::host::{HostValue, ObjectHandle};
use crate::runtime::{HostRuntime, Kwargs};
use crate::xlate::HandleTable;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// `tcp:HOST:PORT`
    Tcp(String),
    /// `stdio:PROGRAM ARG...`, a child process speaking on its stdio.
    Child { program: String, args: Vec<String> },
}

impl Endpoint {
    pub fn parse(text: &str) -> Result<Endpoint> {
        let bad = || {
            BridgeError::host(
                ErrorKind::Io,
                format!("bad endpoint '{text}': use tcp:HOST:PORT or stdio:COMMAND"),
            )
        };
        if let Some(addr) = text.strip_prefix("tcp:") {
            return if addr.contains(':') {
                Ok(Endpoint::Tcp(addr.to_string()))
            } else {
                Err(bad())
            };
        }
        let cmd = text.strip_prefix("stdio:").ok_or_else(bad)?;
        let mut words = cmd.split_whitespace().map(str::to_string);
        let program = words.next().ok_or_else(bad)?;
        Ok(Endpoint::Child {
            program,
            args: words.collect(),
        })
    }
}

fn io_error(e: io::Error) -> BridgeError {
    BridgeError::host(ErrorKind::Io, e.to_string())
}

fn timeout(message: impl Into<String>) -> BridgeError {
    BridgeError::host(ErrorKind::Timeout, message)
}

pub struct AdapterClient {
    writer: Box<dyn Write>,
    replies: Receiver<io::Result<String>>,
    child: Option<Child>,
    next_id: u64,
    timeout: Duration,
    live: HashSet<ObjectHandle>,
    last_error: Option<BridgeError>,
    broken: bool,
}

fn spawn_reader<R: io::Read + Send + 'static>(reader: R) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    rx
}

impl AdapterClient {
    /// Connects and checks the protocol version.
    pub fn connect(endpoint: &Endpoint, timeout: Duration) -> Result<AdapterClient> {
        let (writer, replies, child): (Box<dyn Write>, _, _) = match endpoint {
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(io_error)?;
                stream.set_nodelay(true).map_err(io_error)?;
                let replies = spawn_reader(stream.try_clone().map_err(io_error)?);
                (Box::new(stream), replies, None)
            }
            Endpoint::Child { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| BridgeError::host(ErrorKind::Io, format!("{program}: {e}")))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let replies = spawn_reader(child.stdout.take().expect("piped stdout"));
                (Box::new(stdin), replies, Some(child))
            }
        };
        let mut client = AdapterClient {
            writer,
            replies,
            child,
            next_id: 0,
            timeout,
            live: HashSet::new(),
            last_error: None,
            broken: false,
        };
        let (version, _) = client.ping()?;
        if version != PROTOCOL_VERSION {
            return Err(BridgeError::host(
                ErrorKind::Other("ProtocolError".into()),
                format!("server speaks protocol {version}, expected {PROTOCOL_VERSION}"),
            ));
        }
        Ok(client)
    }

    /// Protocol version and live object count reported by the server.
    pub fn ping(&mut self) -> Result<(String, usize)> {
        let v = self.request(Op::Ping, |_| {})?;
        let HostValue::Map(map) = v else {
            return Err(BridgeError::host(
                ErrorKind::Other("ProtocolError".into()),
                "bad ping reply",
            ));
        };
        let field = |k: &str| {
            map.iter()
                .find(|(key, _)| key.value().as_text() == Some(k))
                .map(|(_, v)| v.clone())
        };
        let version = field("protocol")
            .and_then(|v| v.as_text().map(str::to_string))
            .unwrap_or_default();
        let live = field("live").and_then(|v| v.as_int()).unwrap_or(0);
        Ok((version, live.max(0) as usize))
    }

    fn request(&mut self, op: Op, fill: impl FnOnce(&mut Request)) -> Result<HostValue> {
        if self.broken {
            return Err(timeout("connection to host server lost"));
        }
        self.next_id += 1;
        let mut req = Request::new(self.next_id, op);
        fill(&mut req);
        let mut line = serde_json::to_string(&req).expect("request serialises");
        line.push('\n');
        if let Err(e) = self.writer.write_all(line.as_bytes()).and_then(|_| self.writer.flush()) {
            self.broken = true;
            return Err(timeout(format!("host server unreachable: {e}")));
        }
        let reply = match self.replies.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => {
                self.broken = true;
                return Err(timeout(format!("host server connection failed: {e}")));
            }
            Err(RecvTimeoutError::Timeout) => {
                self.broken = true;
                return Err(timeout(format!("no reply within {:?}", self.timeout)));
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.broken = true;
                return Err(timeout("host server closed the connection"));
            }
        };
        let resp: Response = serde_json::from_str(&reply)
            .map_err(|e| BridgeError::host(ErrorKind::Other("ProtocolError".into()), format!("bad reply: {e}")))?;
        if resp.id != req.id {
            self.broken = true;
            return Err(BridgeError::host(
                ErrorKind::Other("ProtocolError".into()),
                format!("reply id {} does not match request {}", resp.id, req.id),
            ));
        }
        match (resp.ok, resp.value, resp.error) {
            (true, Some(v), _) => {
                let v = from_wire(&v)?;
                self.track(&v);
                Ok(v)
            }
            (false, _, Some(e)) => Err(e.into()),
            _ => Err(BridgeError::host(
                ErrorKind::Other("ProtocolError".into()),
                "reply has neither value nor error",
            )),
        }
    }

    fn track(&mut self, v: &HostValue) {
        let mut stack = vec![v];
        while let Some(v) = stack.pop() {
            match v {
                HostValue::ObjRef(h) => {
                    self.live.insert(*h);
                }
                HostValue::Sequence(items) | HostValue::Tuple(items) => stack.extend(items),
                HostValue::Map(map) => stack.extend(map.values()),
                _ => {}
            }
        }
    }

    fn record<T>(&mut self, r: Result<T>) -> Result<T> {
        if let Err(e) = &r {
            self.last_error = Some(e.clone());
        }
        r
    }

    fn wire_args(args: &[HostValue], kwargs: &Kwargs) -> (Vec<Value>, serde_json::Map<String, Value>) {
        (
            args.iter().map(to_wire).collect(),
            kwargs.iter().map(|(k, v)| (k.clone(), to_wire(v))).collect(),
        )
    }
}

impl Drop for AdapterClient {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl HandleTable for AdapterClient {
    fn is_live(&self, h: ObjectHandle) -> bool {
        self.live.contains(&h)
    }
}

impl HostRuntime for AdapterClient {
    fn load_module(&mut self, name: &str) -> Result<()> {
        let r = self
            .request(Op::Call, |r| r.module = Some(name.to_string()))
            .map(|_| ());
        self.record(r)
    }

    fn call(&mut self, module: &str, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue> {
        let (args, kwargs) = AdapterClient::wire_args(&args, &kwargs);
        let r = self.request(Op::Call, |r| {
            r.module = Some(module.to_string());
            r.name = Some(name.to_string());
            r.args = args;
            r.kwargs = kwargs;
        });
        self.record(r)
    }

    fn call_method(&mut self, h: ObjectHandle, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue> {
        let (args, kwargs) = AdapterClient::wire_args(&args, &kwargs);
        let r = self.request(Op::Method, |r| {
            r.handle = Some(h.to_string());
            r.name = Some(name.to_string());
            r.args = args;
            r.kwargs = kwargs;
        });
        self.record(r)
    }

    fn get_attribute(&mut self, h: ObjectHandle, name: &str) -> Result<HostValue> {
        let r = self.request(Op::Getattr, |r| {
            r.handle = Some(h.to_string());
            r.name = Some(name.to_string());
        });
        self.record(r)
    }

    fn release(&mut self, h: ObjectHandle) -> Result<()> {
        let r = self
            .request(Op::Release, |r| r.handle = Some(h.to_string()))
            .map(|_| ());
        if r.is_ok() {
            self.live.remove(&h);
        }
        self.record(r)
    }

    fn live_count(&self) -> usize {
        self.live.len()
    }

    fn clear_error(&mut self) {
        self.last_error = None;
    }

    fn last_error(&self) -> Option<&BridgeError> {
        self.last_error.as_ref()
    }
}
