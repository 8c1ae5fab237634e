use std::rc::Rc;

use super::*;
use crate::host::HashKey;

const BOB: &str = r#"{"name":"Bob","langs":["English","GERMAN"]}"#;

fn kw(pairs: &[(&str, HostValue)]) -> Kwargs {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

#[test]
fn modules_load_once() {
    let mut rt = LocalRuntime::new();
    let a = rt.module("json").unwrap();
    let b = rt.module("json").unwrap();
    assert!(Rc::ptr_eq(&a, &b));
    assert_eq!(rt.load_count("json"), 1);
    assert!(a.loaded);
    assert!(a.functions.contains_key("loads") && a.functions.contains_key("dumps"));
    let e = rt.load_module("no_such").unwrap_err();
    assert_eq!(e.kind, ErrorKind::ModuleNotFound);
    assert_eq!(rt.load_module("../etc").unwrap_err().kind, ErrorKind::ModuleNotFound);
}

#[test]
fn json_session() {
    let mut rt = LocalRuntime::new();
    let v = rt
        .call("json", "loads", vec![HostValue::text(BOB)], Kwargs::new())
        .unwrap();
    assert_eq!(format!("{v:?}"), "{'name': 'Bob', 'langs': ['English', 'GERMAN']}");
    let HostValue::Map(mut m) = v else {
        panic!("expected a map")
    };
    m.insert(HashKey::text("gpa"), HostValue::Float(3.5));
    let out = rt
        .call(
            "json",
            "dumps",
            vec![HostValue::Map(m.clone())],
            kw(&[("sort_keys", HostValue::Int(1))]),
        )
        .unwrap();
    assert_eq!(
        out,
        HostValue::text(r#"{"gpa": 3.5, "langs": ["English", "GERMAN"], "name": "Bob"}"#)
    );
    let unsorted = rt
        .call("json", "dumps", vec![HostValue::Map(m)], Kwargs::new())
        .unwrap();
    assert_eq!(
        unsorted,
        HostValue::text(r#"{"name": "Bob", "langs": ["English", "GERMAN"], "gpa": 3.5}"#)
    );
}

#[test]
fn argument_binding_errors() {
    let mut rt = LocalRuntime::new();
    let kind = |r: Result<HostValue>| r.unwrap_err().kind;
    assert_eq!(
        kind(rt.call("json", "loads", vec![], Kwargs::new())),
        ErrorKind::ArityError
    );
    assert_eq!(
        kind(rt.call(
            "json",
            "loads",
            vec![HostValue::text("1"), HostValue::text("2")],
            Kwargs::new()
        )),
        ErrorKind::ArityError
    );
    assert_eq!(
        kind(rt.call(
            "json",
            "loads",
            vec![HostValue::text("1")],
            kw(&[("s", HostValue::text("1"))])
        )),
        ErrorKind::ArityError
    );
    assert_eq!(
        kind(rt.call(
            "json",
            "dumps",
            vec![HostValue::Int(1)],
            kw(&[("bogus", HostValue::Int(1))])
        )),
        ErrorKind::UnknownKeyword
    );
    assert_eq!(
        kind(rt.call("json", "nothing", vec![], Kwargs::new())),
        ErrorKind::NotCallable
    );
    assert_eq!(
        kind(rt.call("math", "pi", vec![HostValue::Int(1)], Kwargs::new())),
        ErrorKind::NotCallable
    );
    let by_name = rt
        .call("json", "loads", vec![], kw(&[("s", HostValue::text("[1]"))]))
        .unwrap();
    assert_eq!(format!("{by_name:?}"), "[1]");
}

#[test]
fn errors_are_recorded_and_cleared() {
    let mut rt = LocalRuntime::new();
    let e = rt
        .call("json", "loads", vec![HostValue::text("{")], Kwargs::new())
        .unwrap_err();
    assert_eq!(e.kind, ErrorKind::ValueError);
    assert_eq!(e.host_backtrace, vec!["in json.loads".to_string()]);
    assert_eq!(rt.last_error(), Some(&e));
    rt.clear_error();
    assert!(rt.last_error().is_none());
}

#[test]
fn math_functions_and_constants() {
    let mut rt = LocalRuntime::new();
    let pi = rt.call("math", "pi", vec![], Kwargs::new()).unwrap();
    assert_eq!(pi, HostValue::Float(std::f64::consts::PI));
    let args: Vec<HostValue> = [36.12, -86.67, 33.94, -118.40]
        .into_iter()
        .map(HostValue::Float)
        .collect();
    let d = rt
        .call("math", "haversine", args, Kwargs::new())
        .unwrap()
        .as_f64()
        .unwrap();
    assert!((d - 2886.444).abs() < 1e-3);
    let p = rt
        .call(
            "math",
            "pow",
            vec![HostValue::Int(2), HostValue::Int(10)],
            Kwargs::new(),
        )
        .unwrap();
    assert_eq!(p, HostValue::Float(1024.0));
}

#[test]
fn counter_methods() {
    let mut rt = LocalRuntime::new();
    let HostValue::ObjRef(h) = rt.call("jns_demo", "make_counter", vec![], Kwargs::new()).unwrap() else {
        panic!("expected an object")
    };
    rt.call_method(h, "increment", vec![], Kwargs::new()).unwrap();
    rt.call_method(h, "increment", vec![], Kwargs::new()).unwrap();
    assert_eq!(
        rt.call_method(h, "value", vec![], Kwargs::new()).unwrap(),
        HostValue::Int(2)
    );
    assert_eq!(rt.get_attribute(h, "name").unwrap(), HostValue::text("counter"));
    assert_eq!(
        rt.call_method(h, "reset", vec![], Kwargs::new()).unwrap_err().kind,
        ErrorKind::NoSuchMethod
    );
    assert_eq!(
        rt.get_attribute(h, "nope").unwrap_err().kind,
        ErrorKind::NoSuchAttribute
    );
    rt.release(h).unwrap();
    assert_eq!(
        rt.call_method(h, "value", vec![], Kwargs::new()).unwrap_err().kind,
        ErrorKind::DanglingHandle
    );
    assert_eq!(rt.release(h).unwrap_err().kind, ErrorKind::DanglingHandle);
    assert_eq!(rt.live_count(), 0);
}

#[test]
fn model_double_and_nested_attribute() {
    let mut rt = LocalRuntime::new();
    let HostValue::ObjRef(h) = rt.call("jns_demo", "load_model", vec![], Kwargs::new()).unwrap() else {
        panic!("expected an object")
    };
    let lang = rt
        .call_method(
            h,
            "predict",
            vec![HostValue::text("Janus is a really useful addition")],
            Kwargs::new(),
        )
        .unwrap();
    assert_eq!(format!("{lang:?}"), "('__label__en', 0.9)");
    let meta = rt.get_attribute(h, "meta").unwrap();
    let expected = json::loads(r#"{"dim": 16, "langs": {"en": "English", "de": "German"}}"#).unwrap();
    assert_eq!(meta, expected);
}

#[test]
fn variadic_keywords() {
    let mut rt = LocalRuntime::new();
    let v = rt
        .call(
            "jns_demo",
            "echo",
            vec![HostValue::Int(1), HostValue::Int(2)],
            kw(&[("a", HostValue::Null)]),
        )
        .unwrap();
    assert_eq!(format!("{v:?}"), "{'args': [1, 2], 'kwargs': {'a': None}}");
}

#[test]
fn definitions_on_the_search_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("fasttext.toml"),
        "[functions.load_model]\nbinds = \"jns_demo.load_model\"\ndefaults = { path = \"./lid.176.bin\" }\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("broken.toml"), "[functions.f]\nbinds = 3\n").unwrap();
    let mut rt = LocalRuntime::new().with_search_path(vec![dir.path().to_path_buf()]);
    let HostValue::ObjRef(h) = rt.call("fasttext", "load_model", vec![], Kwargs::new()).unwrap() else {
        panic!("expected an object")
    };
    assert_eq!(rt.get_attribute(h, "path").unwrap(), HostValue::text("./lid.176.bin"));
    let e = rt.load_module("broken").unwrap_err();
    assert_eq!(e.kind, ErrorKind::ValueError);
    assert!(e.message.contains("broken.toml"));
}
