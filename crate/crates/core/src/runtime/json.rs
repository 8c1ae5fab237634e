//! The builtin `json` module.
//!
//! Parsing goes through serde_json. Integers without fraction or exponent
//! become `Int`, every other number `Float`; `true`/`false` become `Int` 1/0.
//! Serialisation uses `", "` and `": "` separators and escapes non-ASCII
//! text unless `ensure_ascii=0`.

use std::fmt::Write as _;

use indexmap::IndexMap;
use serde_json::Value;

use super::{host_error, HostFunction, HostModule, Kwargs, Param};
use crate::error::{ErrorKind, Result};
use crate::host::{float_repr, HashKey, HostValue, ObjectHandle, Registry};

const MAX_DEPTH: usize = 1000;

pub(super) fn module() -> HostModule {
    HostModule::new("json")
        .function(HostFunction::new("loads", vec![Param::required("s")], loads_native))
        .function(HostFunction::new(
            "dumps",
            vec![
                Param::required("obj"),
                Param::optional("sort_keys", HostValue::Int(0)),
                Param::optional("indent", HostValue::Null),
                Param::optional("ensure_ascii", HostValue::Int(1)),
            ],
            dumps_native,
        ))
}

fn loads_native(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> Result<HostValue> {
    match &args[0] {
        HostValue::Text(s) => loads(s),
        other => Err(host_error(
            ErrorKind::TypeError,
            format!("the JSON object must be text, not {}", other.type_name()),
        )),
    }
}

fn truthy(v: &HostValue) -> bool {
    match v {
        HostValue::Null => false,
        HostValue::Int(i) => *i != 0,
        HostValue::Float(f) => *f != 0.0,
        HostValue::Text(s) => !s.is_empty(),
        HostValue::Sequence(x) | HostValue::Tuple(x) => !x.is_empty(),
        HostValue::Set(x) => !x.is_empty(),
        HostValue::Map(x) => !x.is_empty(),
        HostValue::ObjRef(_) => true,
    }
}

fn dumps_native(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> Result<HostValue> {
    let indent = match &args[2] {
        HostValue::Null => None,
        HostValue::Int(n) if *n >= 0 => Some(*n as usize),
        other => {
            return Err(host_error(
                ErrorKind::TypeError,
                format!("indent must be a non-negative int, not {other:?}"),
            ))
        }
    };
    let opts = DumpOptions {
        sort_keys: truthy(&args[1]),
        indent,
        ensure_ascii: truthy(&args[3]),
    };
    dumps(&args[0], &opts).map(HostValue::Text)
}

pub fn loads(text: &str) -> Result<HostValue> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| host_error(ErrorKind::ValueError, format!("JSONDecodeError: {e}")))?;
    Ok(from_json(v))
}

fn from_json(v: Value) -> HostValue {
    match v {
        Value::Null => HostValue::Null,
        Value::Bool(b) => HostValue::Int(b as i64),
        Value::Number(n) => match n.as_i64() {
            Some(i) => HostValue::Int(i),
            None => HostValue::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        Value::String(s) => HostValue::Text(s),
        Value::Array(items) => HostValue::Sequence(items.into_iter().map(from_json).collect()),
        Value::Object(map) => {
            let mut out = IndexMap::with_capacity(map.len());
            for (k, v) in map {
                out.insert(HashKey::text(&k), from_json(v));
            }
            HostValue::Map(out)
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DumpOptions {
    pub sort_keys: bool,
    pub indent: Option<usize>,
    pub ensure_ascii: bool,
}

pub fn dumps(v: &HostValue, opts: &DumpOptions) -> Result<String> {
    let mut out = String::new();
    write_value(&mut out, v, opts, 0)?;
    Ok(out)
}

fn write_string(out: &mut String, s: &str, ensure_ascii: bool) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 || (ensure_ascii && !c.is_ascii()) => {
                let mut buf = [0u16; 2];
                for unit in c.encode_utf16(&mut buf) {
                    let _ = write!(out, "\\u{unit:04x}");
                }
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn float_text(f: f64) -> String {
    if f.is_nan() {
        "NaN".into()
    } else if f.is_infinite() {
        if f > 0.0 {
            "Infinity".into()
        } else {
            "-Infinity".into()
        }
    } else {
        float_repr(f)
    }
}

fn key_text(k: &HostValue) -> Result<String> {
    match k {
        HostValue::Text(s) => Ok(s.clone()),
        HostValue::Int(i) => Ok(i.to_string()),
        HostValue::Float(f) => Ok(float_text(*f)),
        HostValue::Null => Ok("null".into()),
        other => Err(host_error(
            ErrorKind::TypeError,
            format!("keys must be str, int, float or None, not {}", other.type_name()),
        )),
    }
}

fn newline(out: &mut String, opts: &DumpOptions, level: usize) {
    if let Some(n) = opts.indent {
        out.push('\n');
        out.extend(std::iter::repeat_n(' ', n * level));
    }
}

fn write_value(out: &mut String, v: &HostValue, opts: &DumpOptions, level: usize) -> Result<()> {
    if level > MAX_DEPTH {
        return Err(host_error(ErrorKind::ValueError, "maximum nesting depth exceeded"));
    }
    let item_sep = if opts.indent.is_some() { "," } else { ", " };
    match v {
        HostValue::Null => out.push_str("null"),
        HostValue::Int(i) => {
            let _ = write!(out, "{i}");
        }
        HostValue::Float(f) => out.push_str(&float_text(*f)),
        HostValue::Text(s) => write_string(out, s, opts.ensure_ascii),
        HostValue::Sequence(items) | HostValue::Tuple(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return Ok(());
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(item_sep);
                }
                newline(out, opts, level + 1);
                write_value(out, item, opts, level + 1)?;
            }
            newline(out, opts, level);
            out.push(']');
        }
        HostValue::Map(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return Ok(());
            }
            let mut entries = Vec::with_capacity(map.len());
            for (k, v) in map {
                entries.push((key_text(k.value())?, v));
            }
            if opts.sort_keys {
                entries.sort_by(|a, b| a.0.cmp(&b.0));
            }
            out.push('{');
            for (i, (k, v)) in entries.into_iter().enumerate() {
                if i > 0 {
                    out.push_str(item_sep);
                }
                newline(out, opts, level + 1);
                write_string(out, &k, opts.ensure_ascii);
                out.push_str(": ");
                write_value(out, v, opts, level + 1)?;
            }
            newline(out, opts, level);
            out.push('}');
        }
        HostValue::Set(_) | HostValue::ObjRef(_) => {
            return Err(host_error(
                ErrorKind::TypeError,
                format!("Object of type {} is not JSON serializable", v.type_name()),
            ))
        }
    }
    Ok(())
}
