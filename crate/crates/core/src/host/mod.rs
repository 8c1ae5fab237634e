//! The host-side dynamic value model.
//!
//! Numbers follow host-language equality: `Int(1) == Float(1.0)`, and the two
//! hash identically so they collide as map keys and set elements.

mod registry;

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

pub use registry::{HostObject, ObjectHandle, Registry};

/// Largest tuple arity accepted on either side of the bridge.
pub const MAX_TUPLE_ARITY: usize = 65535;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HostValueError {
    #[error("unhashable value of type {0}")]
    Unhashable(&'static str),
    #[error("dangling object handle {0}")]
    DanglingHandle(String),
}

#[derive(Clone)]
pub enum HostValue {
    Null,
    Int(i64),
    Float(f64),
    Text(String),
    Sequence(Vec<HostValue>),
    Tuple(Vec<HostValue>),
    Set(IndexSet<HashKey>),
    Map(IndexMap<HashKey, HostValue>),
    ObjRef(ObjectHandle),
}

impl HostValue {
    pub fn type_name(&self) -> &'static str {
        match self {
            HostValue::Null => "null",
            HostValue::Int(_) => "int",
            HostValue::Float(_) => "float",
            HostValue::Text(_) => "text",
            HostValue::Sequence(_) => "sequence",
            HostValue::Tuple(_) => "tuple",
            HostValue::Set(_) => "set",
            HostValue::Map(_) => "map",
            HostValue::ObjRef(_) => "object",
        }
    }

    pub fn text(s: impl Into<String>) -> HostValue {
        HostValue::Text(s.into())
    }

    pub fn is_hashable(&self) -> bool {
        match self {
            HostValue::Null | HostValue::Int(_) | HostValue::Float(_) | HostValue::Text(_) => true,
            HostValue::Tuple(items) => items.iter().all(HostValue::is_hashable),
            _ => false,
        }
    }

    /// Builds a set, collapsing elements that compare equal.
    pub fn set_from(items: impl IntoIterator<Item = HostValue>) -> Result<HostValue, HostValueError> {
        let mut set = IndexSet::new();
        for item in items {
            set.insert(HashKey::new(item)?);
        }
        Ok(HostValue::Set(set))
    }

    /// Builds a map; a repeated key keeps its first position and its last value.
    pub fn map_from(pairs: impl IntoIterator<Item = (HostValue, HostValue)>) -> Result<HostValue, HostValueError> {
        let mut map = IndexMap::new();
        for (k, v) in pairs {
            map.insert(HashKey::new(k)?, v);
        }
        Ok(HostValue::Map(map))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            HostValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Int or Float widened to f64.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            HostValue::Int(i) => Some(*i as f64),
            HostValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            HostValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Whether the value (transitively) holds an object reference.
    pub fn contains_objref(&self) -> bool {
        match self {
            HostValue::ObjRef(_) => true,
            HostValue::Sequence(items) | HostValue::Tuple(items) => items.iter().any(HostValue::contains_objref),
            HostValue::Set(items) => items.iter().any(|k| k.value().contains_objref()),
            HostValue::Map(map) => map
                .iter()
                .any(|(k, v)| k.value().contains_objref() || v.contains_objref()),
            _ => false,
        }
    }
}

/// If `f` is integral and representable as i64, that integer.
fn float_as_int(f: f64) -> Option<i64> {
    if f.fract() == 0.0 && f >= -9.223_372_036_854_775_808e18 && f < 9.223_372_036_854_775_808e18 {
        Some(f as i64)
    } else {
        None
    }
}

fn numbers_equal(a: &HostValue, b: &HostValue) -> Option<bool> {
    match (a, b) {
        (HostValue::Int(x), HostValue::Int(y)) => Some(x == y),
        // NaN is equal to itself so that Eq stays reflexive for keys.
        (HostValue::Float(x), HostValue::Float(y)) => Some(x == y || (x.is_nan() && y.is_nan())),
        (HostValue::Int(i), HostValue::Float(f)) | (HostValue::Float(f), HostValue::Int(i)) => {
            Some(float_as_int(*f) == Some(*i))
        }
        _ => None,
    }
}

impl PartialEq for HostValue {
    fn eq(&self, other: &Self) -> bool {
        if let Some(eq) = numbers_equal(self, other) {
            return eq;
        }
        match (self, other) {
            (HostValue::Null, HostValue::Null) => true,
            (HostValue::Text(a), HostValue::Text(b)) => a == b,
            (HostValue::Sequence(a), HostValue::Sequence(b)) | (HostValue::Tuple(a), HostValue::Tuple(b)) => a == b,
            (HostValue::Set(a), HostValue::Set(b)) => a.len() == b.len() && a.iter().all(|k| b.contains(k)),
            (HostValue::Map(a), HostValue::Map(b)) => {
                a.len() == b.len() && a.iter().all(|(k, v)| b.get(k).is_some_and(|w| w == v))
            }
            (HostValue::ObjRef(a), HostValue::ObjRef(b)) => a == b,
            _ => false,
        }
    }
}

/// Hash of a hashable value; equal values (under numeric equality) hash equally.
pub fn value_hash(v: &HostValue) -> Result<u64, HostValueError> {
    let mut h = DefaultHasher::new();
    feed_hash(v, &mut h)?;
    Ok(h.finish())
}

fn feed_hash(v: &HostValue, h: &mut DefaultHasher) -> Result<(), HostValueError> {
    match v {
        HostValue::Null => h.write_u8(0),
        HostValue::Int(i) => {
            h.write_u8(1);
            h.write_i64(*i);
        }
        HostValue::Float(f) => match float_as_int(*f) {
            Some(i) => {
                h.write_u8(1);
                h.write_i64(i);
            }
            None => {
                h.write_u8(2);
                let bits = if f.is_nan() { f64::NAN.to_bits() } else { f.to_bits() };
                h.write_u64(bits);
            }
        },
        HostValue::Text(s) => {
            h.write_u8(3);
            s.hash(h);
        }
        HostValue::Tuple(items) => {
            h.write_u8(4);
            h.write_usize(items.len());
            for item in items {
                feed_hash(item, h)?;
            }
        }
        other => return Err(HostValueError::Unhashable(other.type_name())),
    }
    Ok(())
}

/// A value admitted as a set element or map key.
#[derive(Clone)]
pub struct HashKey {
    value: HostValue,
    hash: u64,
}

impl HashKey {
    pub fn new(value: HostValue) -> Result<HashKey, HostValueError> {
        let hash = value_hash(&value)?;
        Ok(HashKey { value, hash })
    }

    pub fn text(s: &str) -> HashKey {
        HashKey::new(HostValue::text(s)).expect("text is hashable")
    }

    pub fn value(&self) -> &HostValue {
        &self.value
    }

    pub fn into_value(self) -> HostValue {
        self.value
    }
}

impl PartialEq for HashKey {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.value == other.value
    }
}

impl Eq for HashKey {}

impl Hash for HashKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl fmt::Debug for HashKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.value.fmt(f)
    }
}

/// Host-style float text: shortest round-trip digits, positional between
/// 1e-4 and 1e16, otherwise `d.ddde+XX`.
/// Quoted text in the host's repr style: single quotes unless the text
/// holds a single quote and no double quote.
pub fn str_repr(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c if (c as u32) < 0x20 || (0x7f..0xa0).contains(&(c as u32)) => {
                out.push_str(&format!("\\x{:02x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

pub fn float_repr(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent digits");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if (-4..16).contains(&exp) {
        if exp >= 0 {
            let split = exp as usize + 1;
            let (int, frac) = if digits.len() > split {
                (digits[..split].to_string(), digits[split..].to_string())
            } else {
                (format!("{digits:0<split$}"), "0".to_string())
            };
            format!("{int}.{frac}")
        } else {
            format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
        }
    } else {
        let (first, rest) = digits.split_at(1);
        let frac = if rest.is_empty() {
            String::new()
        } else {
            format!(".{rest}")
        };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{first}{frac}e{esign}{:02}", exp.abs())
    };
    format!("{sign}{body}")
}

/// Host-flavoured rendering, e.g. `{'name': 'Bob', 'langs': ['English']}`.
impl fmt::Debug for HostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn seq(f: &mut fmt::Formatter<'_>, open: &str, items: &[HostValue], close: &str) -> fmt::Result {
            f.write_str(open)?;
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{item:?}")?;
            }
            if open == "(" && items.len() == 1 {
                f.write_str(",")?;
            }
            f.write_str(close)
        }
        match self {
            HostValue::Null => f.write_str("None"),
            HostValue::Int(i) => write!(f, "{i}"),
            HostValue::Float(x) => f.write_str(&float_repr(*x)),
            HostValue::Text(s) => f.write_str(&str_repr(s)),
            HostValue::Sequence(items) => seq(f, "[", items, "]"),
            HostValue::Tuple(items) => seq(f, "(", items, ")"),
            HostValue::Set(items) => {
                if items.is_empty() {
                    return f.write_str("set()");
                }
                let v: Vec<HostValue> = items.iter().map(|k| k.value().clone()).collect();
                seq(f, "{", &v, "}")
            }
            HostValue::Map(map) => {
                f.write_str("{")?;
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{:?}: {v:?}", k.value())?;
                }
                f.write_str("}")
            }
            HostValue::ObjRef(h) => write!(f, "<object {h}>"),
        }
    }
}

impl fmt::Display for HostValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl From<i64> for HostValue {
    fn from(v: i64) -> Self {
        HostValue::Int(v)
    }
}

impl From<f64> for HostValue {
    fn from(v: f64) -> Self {
        HostValue::Float(v)
    }
}

impl From<&str> for HostValue {
    fn from(v: &str) -> Self {
        HostValue::Text(v.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn str_repr_matches_host_conventions() {
        let cases = [
            ("plain", "'plain'"),
            ("it's", "\"it's\""),
            ("both ' and \"", "'both \\' and \"'"),
            ("a\nb\tc\\", "'a\\nb\\tc\\\\'"),
            ("\u{1}\u{7f}é", "'\\x01\\x7fé'"),
        ];
        for (text, expected) in cases {
            assert_eq!(str_repr(text), expected, "{text:?}");
        }
    }

    #[test]
    fn float_repr_matches_host_conventions() {
        let cases = [
            (3.5, "3.5"),
            (1.0, "1.0"),
            (0.0, "0.0"),
            (-0.0, "-0.0"),
            (100.0, "100.0"),
            (1e16, "1e+16"),
            (1.5e-5, "1.5e-05"),
            (0.0001, "0.0001"),
            (123456789012345678.0, "1.2345678901234568e+17"),
            (0.1 + 0.2, "0.30000000000000004"),
            (2886.444442837984, "2886.444442837984"),
            (1e300, "1e+300"),
            (-2.5e-7, "-2.5e-07"),
        ];
        for (x, text) in cases {
            assert_eq!(float_repr(x), text);
        }
    }

    #[test]
    fn int_and_float_share_key_identity() {
        assert_eq!(value_hash(&HostValue::Int(1)), value_hash(&HostValue::Float(1.0)));
        assert_eq!(HostValue::Int(1), HostValue::Float(1.0));
        let m = HostValue::map_from(vec![
            (HostValue::Int(1), HostValue::text("a")),
            (HostValue::Float(1.0), HostValue::text("b")),
        ])
        .unwrap();
        let HostValue::Map(m) = m else { unreachable!() };
        assert_eq!(m.len(), 1);
        assert_eq!(m[0], HostValue::text("b"));
    }

    #[test]
    fn tuple_hash_is_stable() {
        let t = HostValue::Tuple(vec![HostValue::text("a"), HostValue::Int(2)]);
        assert_eq!(value_hash(&t).unwrap(), value_hash(&t.clone()).unwrap());
    }

    #[test]
    fn containers_are_unhashable() {
        assert_eq!(
            value_hash(&HostValue::Sequence(vec![])),
            Err(HostValueError::Unhashable("sequence"))
        );
        assert!(value_hash(&HostValue::Set(IndexSet::new())).is_err());
        assert!(value_hash(&HostValue::Map(IndexMap::new())).is_err());
        assert!(value_hash(&HostValue::ObjRef(ObjectHandle::from_raw(1))).is_err());
        let nested = HostValue::Tuple(vec![HostValue::Sequence(vec![])]);
        assert!(value_hash(&nested).is_err());
    }

    #[test]
    fn maps_keep_insertion_order() {
        let m = HostValue::map_from(vec![
            (HostValue::text("z"), HostValue::Int(1)),
            (HostValue::text("a"), HostValue::Int(2)),
            (HostValue::text("m"), HostValue::Int(3)),
        ])
        .unwrap();
        let HostValue::Map(m) = m else { unreachable!() };
        let keys: Vec<_> = m.keys().map(|k| k.value().as_text().unwrap().to_string()).collect();
        assert_eq!(keys, ["z", "a", "m"]);
    }

    #[test]
    fn set_equality_ignores_order() {
        let a = HostValue::set_from(vec![HostValue::Int(1), HostValue::Int(2)]).unwrap();
        let b = HostValue::set_from(vec![HostValue::Int(2), HostValue::Float(1.0)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn debug_rendering() {
        let v = HostValue::Tuple(vec![HostValue::text("b"), HostValue::Int(1)]);
        assert_eq!(format!("{v:?}"), "('b', 1)");
        assert_eq!(format!("{:?}", HostValue::Tuple(vec![HostValue::Int(1)])), "(1,)");
    }
}
