//! Declarative module definitions.
//!
//! ```toml
//! [functions.load_model]
//! binds = "jns_demo.load_model"
//! defaults = { path = "./lid.176.bin" }
//!
//! [constants]
//! version = "0.9.2"
//! ```
//!
//! Each function is a builtin `module.function` under a new name, with
//! parameter defaults optionally replaced.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::Deserialize;

use super::{builtin_function, host_error, HostModule};
use crate::error::{BridgeError, ErrorKind, Result};
use crate::host::{HashKey, HostValue};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleDef {
    #[serde(default)]
    functions: BTreeMap<String, FunctionDef>,
    #[serde(default)]
    constants: BTreeMap<String, toml::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDef {
    binds: String,
    #[serde(default)]
    defaults: BTreeMap<String, toml::Value>,
}

fn bad(message: impl Into<String>) -> BridgeError {
    host_error(ErrorKind::ValueError, message)
}

fn to_value(v: toml::Value) -> Result<HostValue> {
    Ok(match v {
        toml::Value::String(s) => HostValue::Text(s),
        toml::Value::Integer(i) => HostValue::Int(i),
        toml::Value::Float(f) => HostValue::Float(f),
        toml::Value::Boolean(b) => HostValue::Int(b as i64),
        toml::Value::Array(items) => HostValue::Sequence(items.into_iter().map(to_value).collect::<Result<_>>()?),
        toml::Value::Table(t) => {
            let mut map = IndexMap::new();
            for (k, v) in t {
                map.insert(HashKey::text(&k), to_value(v)?);
            }
            HostValue::Map(map)
        }
        toml::Value::Datetime(d) => HostValue::Text(d.to_string()),
    })
}

pub fn parse_module_def(name: &str, text: &str) -> Result<HostModule> {
    let def: ModuleDef =
        toml::from_str(text).map_err(|e| bad(format!("invalid module definition: {}", e.message())))?;
    let mut module = HostModule::new(name);
    for (fname, f) in def.functions {
        let (target_mod, target_fn) = f
            .binds
            .split_once('.')
            .ok_or_else(|| bad(format!("{fname}: binds must be module.function, got '{}'", f.binds)))?;
        let mut func = builtin_function(target_mod, target_fn)
            .ok_or_else(|| bad(format!("{fname}: no builtin implementation '{}'", f.binds)))?;
        func.name = fname.clone();
        for (param, v) in f.defaults {
            let slot = func
                .params
                .iter_mut()
                .find(|p| p.name == param)
                .ok_or_else(|| bad(format!("{fname}: '{}' has no parameter '{param}'", f.binds)))?;
            slot.default = Some(to_value(v)?);
        }
        module = module.function(func);
    }
    for (cname, v) in def.constants {
        if module.functions.contains_key(&cname) {
            return Err(bad(format!("'{cname}' is both a function and a constant")));
        }
        module = module.constant(&cname, to_value(v)?);
    }
    Ok(module)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rebinds_builtins_with_new_defaults() {
        let m = parse_module_def(
            "fasttext",
            "[functions.load_model]\nbinds = \"jns_demo.load_model\"\ndefaults = { path = \"./lid.176.bin\" }\n[constants]\nversion = \"0.9.2\"\n",
        )
        .unwrap();
        let f = &m.functions["load_model"];
        assert_eq!(f.params[0].default, Some(HostValue::text("./lid.176.bin")));
        assert_eq!(m.constants["version"], HostValue::text("0.9.2"));
    }

    #[test]
    fn rejects_bad_definitions() {
        for text in [
            "[functions.f]\nbinds = \"nowhere\"\n",
            "[functions.f]\nbinds = \"json.nothing\"\n",
            "[functions.f]\nbinds = \"json.loads\"\ndefaults = { zzz = 1 }\n",
            "[functions.f]\nbinds = \"json.loads\"\nextra = 1\n",
            "not toml at all [",
        ] {
            assert_eq!(
                parse_module_def("m", text).unwrap_err().kind,
                ErrorKind::ValueError,
                "{text}"
            );
        }
    }
}
