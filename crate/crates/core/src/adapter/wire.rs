//! Newline-delimited JSON messages between the bridge and an out-of-process
//! host.
//!
//! Values are tagged objects: `{"t":"null"}`, `{"t":"i","v":1}`,
//! `{"t":"f","v":1.5}`, `{"t":"s","v":"x"}`, `{"t":"seq","v":[..]}`,
//! `{"t":"tup","v":[..]}`, `{"t":"set","v":[..]}`, `{"t":"map","v":[[k,v],..]}`
//! and `{"t":"obj","h":"oN"}`. Non-finite floats travel as the strings
//! `"nan"`, `"inf"` and `"-inf"`. Set elements are written sorted by their
//! encoded text.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{BridgeError, ErrorKind, Result};
use crate::host::{HashKey, HostValue, ObjectHandle};

pub const PROTOCOL_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Call,
    Method,
    Getattr,
    Release,
    Ping,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub op: Op,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub module: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub handle: Option<String>,
    #[serde(default)]
    pub args: Vec<Value>,
    #[serde(default)]
    pub kwargs: Map<String, Value>,
}

impl Request {
    pub fn new(id: u64, op: Op) -> Request {
        Request {
            id,
            op,
            module: None,
            name: None,
            handle: None,
            args: Vec::new(),
            kwargs: Map::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub kind: String,
    pub message: String,
    #[serde(default)]
    pub backtrace: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

impl Response {
    pub fn ok(id: u64, value: Value) -> Response {
        Response {
            id,
            ok: true,
            value: Some(value),
            error: None,
        }
    }

    pub fn err(id: u64, e: &BridgeError) -> Response {
        Response {
            id,
            ok: false,
            value: None,
            error: Some(WireError {
                kind: e.kind.name().to_string(),
                message: e.message.clone(),
                backtrace: e.host_backtrace.clone(),
            }),
        }
    }
}

impl From<WireError> for BridgeError {
    fn from(e: WireError) -> BridgeError {
        BridgeError::host(ErrorKind::from_name(&e.kind), e.message).with_host_backtrace(e.backtrace)
    }
}

fn float_to_wire(f: f64) -> Value {
    if f.is_nan() {
        json!("nan")
    } else if f.is_infinite() {
        json!(if f > 0.0 { "inf" } else { "-inf" })
    } else {
        json!(f)
    }
}

pub fn to_wire(v: &HostValue) -> Value {
    match v {
        HostValue::Null => json!({"t": "null"}),
        HostValue::Int(i) => json!({"t": "i", "v": i}),
        HostValue::Float(f) => json!({"t": "f", "v": float_to_wire(*f)}),
        HostValue::Text(s) => json!({"t": "s", "v": s}),
        HostValue::Sequence(items) => {
            json!({"t": "seq", "v": items.iter().map(to_wire).collect::<Vec<_>>()})
        }
        HostValue::Tuple(items) => {
            json!({"t": "tup", "v": items.iter().map(to_wire).collect::<Vec<_>>()})
        }
        HostValue::Set(items) => {
            let mut encoded: Vec<(String, Value)> = items
                .iter()
                .map(|k| {
                    let w = to_wire(k.value());
                    (w.to_string(), w)
                })
                .collect();
            encoded.sort_by(|a, b| a.0.cmp(&b.0));
            json!({"t": "set", "v": encoded.into_iter().map(|(_, w)| w).collect::<Vec<_>>()})
        }
        HostValue::Map(map) => {
            let pairs: Vec<Value> = map
                .iter()
                .map(|(k, v)| json!([to_wire(k.value()), to_wire(v)]))
                .collect();
            json!({"t": "map", "v": pairs})
        }
        HostValue::ObjRef(h) => json!({"t": "obj", "h": h.to_string()}),
    }
}

fn malformed(what: impl std::fmt::Display) -> BridgeError {
    BridgeError::host(
        ErrorKind::Other("ProtocolError".into()),
        format!("malformed wire value: {what}"),
    )
}

fn items(v: Option<&Value>) -> Result<&Vec<Value>> {
    v.and_then(Value::as_array)
        .ok_or_else(|| malformed("expected an array"))
}

pub fn from_wire(w: &Value) -> Result<HostValue> {
    let tag = w.get("t").and_then(Value::as_str).ok_or_else(|| malformed(w))?;
    let v = w.get("v");
    Ok(match tag {
        "null" => HostValue::Null,
        "i" => HostValue::Int(v.and_then(Value::as_i64).ok_or_else(|| malformed(w))?),
        "f" => match v {
            Some(Value::String(s)) => match s.as_str() {
                "nan" => HostValue::Float(f64::NAN),
                "inf" => HostValue::Float(f64::INFINITY),
                "-inf" => HostValue::Float(f64::NEG_INFINITY),
                _ => return Err(malformed(w)),
            },
            Some(n) => HostValue::Float(n.as_f64().ok_or_else(|| malformed(w))?),
            None => return Err(malformed(w)),
        },
        "s" => HostValue::Text(v.and_then(Value::as_str).ok_or_else(|| malformed(w))?.to_string()),
        "seq" => HostValue::Sequence(items(v)?.iter().map(from_wire).collect::<Result<_>>()?),
        "tup" => HostValue::Tuple(items(v)?.iter().map(from_wire).collect::<Result<_>>()?),
        "set" => HostValue::set_from(items(v)?.iter().map(from_wire).collect::<Result<Vec<_>>>()?)?,
        "map" => {
            let mut map = indexmap::IndexMap::new();
            for pair in items(v)? {
                match pair.as_array().map(Vec::as_slice) {
                    Some([k, v]) => {
                        map.insert(HashKey::new(from_wire(k)?)?, from_wire(v)?);
                    }
                    _ => return Err(malformed(pair)),
                }
            }
            HostValue::Map(map)
        }
        "obj" => {
            let h = w.get("h").and_then(Value::as_str).and_then(ObjectHandle::parse);
            HostValue::ObjRef(h.ok_or_else(|| malformed(w))?)
        }
        _ => return Err(malformed(w)),
    })
}
