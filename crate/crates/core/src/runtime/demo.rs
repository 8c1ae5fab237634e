//! `jns_demo`: test doubles and benchmark helpers.
//!
//! `load_model` stands in for a language-identification model. Its
//! `predict` method ignores the text and always answers
//! `('__label__en', 0.9)`.

use indexmap::IndexMap;

use super::{host_error, HostClass, HostFunction, HostModule, Kwargs, Param};
use crate::error::{ErrorKind, Result};
use crate::host::{HashKey, HostObject, HostValue, ObjectHandle, Registry};

pub const PREDICT_LABEL: &str = "__label__en";
pub const PREDICT_CONFIDENCE: f64 = 0.9;

type R = Result<HostValue>;

fn load_model(reg: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> R {
    let path = args[0]
        .as_text()
        .ok_or_else(|| host_error(ErrorKind::TypeError, "model path must be text"))?
        .to_string();
    let mut langs = IndexMap::new();
    langs.insert(HashKey::text("en"), HostValue::text("English"));
    langs.insert(HashKey::text("de"), HostValue::text("German"));
    let mut meta = IndexMap::new();
    meta.insert(HashKey::text("dim"), HostValue::Int(16));
    meta.insert(HashKey::text("langs"), HostValue::Map(langs));
    let obj = HostObject::new("FastTextModel")
        .with_attr("name", HostValue::text("lid.176"))
        .with_attr("path", HostValue::Text(path))
        .with_attr("meta", HostValue::Map(meta));
    Ok(HostValue::ObjRef(reg.register(obj)))
}

fn predict(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> R {
    if args[0].as_text().is_none() {
        return Err(host_error(ErrorKind::TypeError, "predict() expects text"));
    }
    Ok(HostValue::Tuple(vec![
        HostValue::text(PREDICT_LABEL),
        HostValue::Float(PREDICT_CONFIDENCE),
    ]))
}

fn make_counter(reg: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> R {
    let start = int_arg(&args[0], "make_counter")?;
    let obj = HostObject::new("Counter")
        .with_attr("name", HostValue::text("counter"))
        .with_attr("count", HostValue::Int(start));
    Ok(HostValue::ObjRef(reg.register(obj)))
}

fn increment(reg: &mut Registry, this: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> R {
    let by = int_arg(&args[0], "increment")?;
    let obj = reg.get_mut(this.expect("method receiver"))?;
    let n = obj.attrs.get("count").and_then(HostValue::as_int).unwrap_or(0);
    let n = n
        .checked_add(by)
        .ok_or_else(|| host_error(ErrorKind::Other("OverflowError".into()), "counter overflow"))?;
    obj.attrs.insert("count".into(), HostValue::Int(n));
    Ok(HostValue::Int(n))
}

fn value(reg: &mut Registry, this: Option<ObjectHandle>, _: Vec<HostValue>, _: Kwargs) -> R {
    let obj = reg.get(this.expect("method receiver"))?;
    Ok(obj.attrs.get("count").cloned().unwrap_or(HostValue::Int(0)))
}

fn int_arg(v: &HostValue, func: &str) -> Result<i64> {
    v.as_int().ok_or_else(|| {
        host_error(
            ErrorKind::TypeError,
            format!("{func}() expects an int, not {}", v.type_name()),
        )
    })
}

fn bitranslate(_: &mut Registry, _: Option<ObjectHandle>, mut args: Vec<HostValue>, _: Kwargs) -> R {
    Ok(args.swap_remove(0))
}

fn dec(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> R {
    let n = int_arg(&args[0], "dec")?;
    n.checked_sub(1)
        .map(HostValue::Int)
        .ok_or_else(|| host_error(ErrorKind::Other("OverflowError".into()), "int too small"))
}

const MAX_LIST: i64 = 10_000_000;

fn make_list(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> R {
    let n = int_arg(&args[0], "make_list")?;
    if n > MAX_LIST {
        return Err(host_error(
            ErrorKind::LimitError,
            format!("make_list() size {n} exceeds {MAX_LIST}"),
        ));
    }
    Ok(HostValue::Sequence((0..n.max(0)).map(HostValue::Int).collect()))
}

fn raise(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, _: Kwargs) -> R {
    let message = match &args[0] {
        HostValue::Text(s) => s.clone(),
        other => format!("{other:?}"),
    };
    Err(host_error(ErrorKind::ValueError, message))
}

fn echo_kwargs(_: &mut Registry, _: Option<ObjectHandle>, args: Vec<HostValue>, kwargs: Kwargs) -> R {
    let mut map = IndexMap::new();
    map.insert(HashKey::text("args"), HostValue::Sequence(args));
    let kw = kwargs.into_iter().map(|(k, v)| (HashKey::text(&k), v)).collect();
    map.insert(HashKey::text("kwargs"), HostValue::Map(kw));
    Ok(HostValue::Map(map))
}

pub(super) fn module() -> HostModule {
    HostModule::new("jns_demo")
        .function(HostFunction::new(
            "load_model",
            vec![Param::optional("path", HostValue::text("lid.176.bin"))],
            load_model,
        ))
        .function(HostFunction::new(
            "make_counter",
            vec![Param::optional("start", HostValue::Int(0))],
            make_counter,
        ))
        .function(HostFunction::new(
            "bitranslate",
            vec![Param::required("x")],
            bitranslate,
        ))
        .function(HostFunction::new("dec", vec![Param::required("n")], dec))
        .function(HostFunction::new("make_list", vec![Param::required("n")], make_list))
        .function(HostFunction::new("fail", vec![Param::required("message")], raise))
        .function(HostFunction::new("echo", vec![], echo_kwargs).variadic().with_kwargs())
}

pub(super) fn classes() -> Vec<HostClass> {
    let mut model = IndexMap::new();
    model.insert(
        "predict".to_string(),
        HostFunction::new(
            "predict",
            vec![Param::required("text"), Param::optional("k", HostValue::Int(1))],
            predict,
        ),
    );
    let mut counter = IndexMap::new();
    counter.insert(
        "increment".to_string(),
        HostFunction::new("increment", vec![Param::optional("by", HostValue::Int(1))], increment),
    );
    counter.insert("value".to_string(), HostFunction::new("value", vec![], value));
    vec![
        HostClass {
            name: "FastTextModel".into(),
            methods: model,
        },
        HostClass {
            name: "Counter".into(),
            methods: counter,
        },
    ]
}
