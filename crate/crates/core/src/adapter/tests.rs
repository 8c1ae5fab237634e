use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::time::Duration;

use super::*;
use crate::bridge::{Bridge, QueryFlags};
use crate::engine::EngineConfig;
use crate::host::HostValue;
use crate::runtime::{HostRuntime, Kwargs};
use crate::term::parse_term;
use crate::xlate::HandleTable;

fn remote_bridge() -> Bridge {
    let ep = spawn_loopback(DEFAULT_ALLOW).unwrap();
    let client = AdapterClient::connect(&ep, DEFAULT_TIMEOUT).unwrap();
    Bridge::with_runtime(Box::new(client), EngineConfig::default())
}

const SESSION: &str = r#"pyfunc(json, loads('{"name":"Bob","langs":["English","GERMAN"]}'), D),
    D = pyDict(L), append(L, [''(gpa,3.5)], L1),
    pyfunc(json, dumps(pyDict(L1)), [sort_keys=1], S),
    pyfunc(math, haversine(36.12,-86.67,33.94,-118.40), K),
    pyfunc(math, pi, P)"#;

#[test]
fn endpoints_parse() {
    assert_eq!(
        Endpoint::parse("tcp:127.0.0.1:9").unwrap(),
        Endpoint::Tcp("127.0.0.1:9".into())
    );
    assert_eq!(
        Endpoint::parse("stdio:janus serve-host").unwrap(),
        Endpoint::Child {
            program: "janus".into(),
            args: vec!["serve-host".into()]
        }
    );
    assert!(Endpoint::parse("udp:x").is_err());
    assert!(Endpoint::parse("stdio:").is_err());
}

#[test]
fn adapter_matches_local_runtime() {
    let goal = parse_term(SESSION).unwrap();
    let mut local = Bridge::new();
    let mut remote = remote_bridge();
    let a = local.solve("user", &goal).unwrap();
    let b = remote.solve("user", &goal).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 1);

    for br in [&mut local, &mut remote] {
        br.consult_text(
            "basics",
            "reverse([],[]).\nreverse([H|T],R) :- reverse(T,RT), append(RT,[H],R).\n",
        )
        .unwrap();
        br.consult_text("m", "parse(S, V) :- pyfunc(json, loads(S), V).\n")
            .unwrap();
    }
    let input = [HostValue::text(r#"{"a": [1, 2.5, null]}"#)];
    assert_eq!(
        local.jns_qdet("m", "parse", &input).unwrap(),
        remote.jns_qdet("m", "parse", &input).unwrap()
    );
    let list = [HostValue::Sequence(vec![HostValue::Int(1), HostValue::text("x")])];
    assert_eq!(
        local.jns_comp("basics", "reverse", &list, QueryFlags::vars(1)).unwrap(),
        remote
            .jns_comp("basics", "reverse", &list, QueryFlags::vars(1))
            .unwrap()
    );
    let bad = parse_term("pyfunc(json, loads('{'), X)").unwrap();
    let (ea, eb) = (
        local.solve("user", &bad).unwrap_err(),
        remote.solve("user", &bad).unwrap_err(),
    );
    assert_eq!((ea.kind, ea.host_backtrace), (eb.kind, eb.host_backtrace));
}

#[test]
fn remote_objects_and_leaks() {
    let ep = spawn_loopback(DEFAULT_ALLOW).unwrap();
    let mut c = AdapterClient::connect(&ep, DEFAULT_TIMEOUT).unwrap();
    for _ in 0..1000 {
        let HostValue::ObjRef(h) = c.call("jns_demo", "make_counter", vec![], Kwargs::new()).unwrap() else {
            panic!("expected an object")
        };
        assert!(c.is_live(h));
        assert_eq!(
            c.call_method(h, "increment", vec![HostValue::Int(2)], Kwargs::new())
                .unwrap(),
            HostValue::Int(2)
        );
        c.release(h).unwrap();
        assert!(!c.is_live(h));
    }
    assert_eq!(c.ping().unwrap(), ("1".to_string(), 0));
    assert_eq!(c.live_count(), 0);
    let e = c.call("os", "system", vec![], Kwargs::new()).unwrap_err();
    assert_eq!(e.kind, ErrorKind::ModuleNotAllowed);
    assert_eq!(c.load_module("nope").unwrap_err().kind, ErrorKind::ModuleNotAllowed);
    assert!(c.load_module("json").is_ok());
}

#[test]
fn silent_server_times_out() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut writer = stream;
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        writeln!(
            writer,
            r#"{{"id":1,"ok":true,"value":{{"t":"map","v":[[{{"t":"s","v":"protocol"}},{{"t":"s","v":"1"}}]]}}}}"#
        )
        .unwrap();
        // Accept the next request, then go quiet.
        line.clear();
        reader.read_line(&mut line).unwrap();
        std::thread::sleep(Duration::from_secs(2));
    });
    let mut c = AdapterClient::connect(&Endpoint::Tcp(addr.to_string()), Duration::from_millis(200)).unwrap();
    let e = c
        .call("json", "loads", vec![HostValue::text("1")], Kwargs::new())
        .unwrap_err();
    assert_eq!(e.kind, ErrorKind::Timeout);
    let e = c
        .call("json", "loads", vec![HostValue::text("1")], Kwargs::new())
        .unwrap_err();
    assert_eq!(e.kind, ErrorKind::Timeout);
}

#[test]
fn server_dying_mid_call_is_a_timeout() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut writer = stream;
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        writeln!(
            writer,
            r#"{{"id":1,"ok":true,"value":{{"t":"map","v":[[{{"t":"s","v":"protocol"}},{{"t":"s","v":"1"}}]]}}}}"#
        )
        .unwrap();
        line.clear();
        reader.read_line(&mut line).unwrap();
    });
    let mut b = Bridge::with_runtime(
        Box::new(AdapterClient::connect(&Endpoint::Tcp(addr.to_string()), DEFAULT_TIMEOUT).unwrap()),
        EngineConfig::default(),
    );
    let e = b
        .solve("user", &parse_term("pyfunc(math, sqrt(2), X)").unwrap())
        .unwrap_err();
    assert_eq!(e.kind, ErrorKind::Timeout);
    assert_eq!(e.origin, crate::error::Origin::Host);
}

#[test]
fn wrong_protocol_is_rejected() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut writer = stream;
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        writeln!(
            writer,
            r#"{{"id":1,"ok":true,"value":{{"t":"map","v":[[{{"t":"s","v":"protocol"}},{{"t":"s","v":"9"}}]]}}}}"#
        )
        .unwrap();
    });
    let r = AdapterClient::connect(&Endpoint::Tcp(addr.to_string()), DEFAULT_TIMEOUT);
    assert_eq!(r.err().unwrap().kind.name(), "ProtocolError");
}
