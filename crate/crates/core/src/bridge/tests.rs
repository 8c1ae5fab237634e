use super::*;
use crate::error::Origin;
use crate::host::HashKey;
use crate::term::parse_term;

const JNS_TEST: &str = "
test1(a,b,1).
test1(a,c,2).
test1(a,d,5) :- tnot(unk(something)).
:- table unk/1.
unk(X) :- tnot(unk(X)).
";

const BASICS: &str = "reverse([],[]).\nreverse([H|T],R) :- reverse(T,RT), append(RT,[H],R).\n";

fn bridge() -> Bridge {
    let mut b = Bridge::new();
    b.consult_text("jns_test", JNS_TEST).unwrap();
    b.consult_text("basics", BASICS).unwrap();
    b
}

fn solve1(b: &mut Bridge, goal: &str) -> Answer {
    let mut answers = b.solve("user", &parse_term(goal).unwrap()).unwrap();
    assert_eq!(answers.len(), 1, "{goal}");
    answers.remove(0)
}

fn binding(a: &Answer, name: &str) -> String {
    a.bindings
        .iter()
        .find(|(v, _)| v.name.is_some_and(|n| n.as_str() == name))
        .map(|(_, t)| t.to_string())
        .unwrap_or_else(|| panic!("no binding for {name}"))
}

#[test]
fn json_session_from_the_logic_side() {
    let mut b = bridge();
    let a = solve1(
        &mut b,
        r#"pyfunc(json, loads('{"name":"Bob","langs":["English","GERMAN"]}'), D),
           D = pyDict(L), append(L, [''(gpa,3.5)], L1),
           pyfunc(json, dumps(pyDict(L1)), [sort_keys=1], S)"#,
    );
    assert_eq!(
        binding(&a, "D"),
        "pyDict([''(name,'Bob'),''(langs,['English','GERMAN'])])"
    );
    assert_eq!(
        a.bindings[3].1,
        Term::atom(r#"{"gpa": 3.5, "langs": ["English", "GERMAN"], "name": "Bob"}"#)
    );
    assert_eq!(b.live_count(), 0);
}

#[test]
fn comprehension_truth_modes() {
    let mut b = bridge();
    let args = [HostValue::text("a")];
    let plain = b.jns_comp("jns_test", "test1", &args, QueryFlags::vars(2)).unwrap();
    assert_eq!(format!("{plain:?}"), "[(('b', 1), 1), (('c', 2), 1), (('d', 5), 2)]");
    let set = b
        .jns_comp("jns_test", "test1", &args, QueryFlags::vars(2).with_set(true))
        .unwrap();
    assert_eq!(format!("{set:?}"), "{(('b', 1), 1), (('c', 2), 1), (('d', 5), 2)}");
    let delays = b
        .jns_comp(
            "jns_test",
            "test1",
            &args,
            QueryFlags::vars(2).with_truth(TruthMode::DelayLists),
        )
        .unwrap();
    assert_eq!(
        format!("{delays:?}"),
        "[(('b', 1), []), (('c', 2), []), (('d', 5), ['tnot(unk(something))'])]"
    );
    let bare = b
        .jns_comp(
            "jns_test",
            "test1",
            &args,
            QueryFlags::vars(2).with_truth(TruthMode::None),
        )
        .unwrap();
    assert_eq!(format!("{bare:?}"), "[('b', 1), ('c', 2), ('d', 5)]");
    let closed = [HostValue::text("a"), HostValue::text("b"), HostValue::Int(1)];
    let zero = b.jns_comp("jns_test", "test1", &closed, QueryFlags::vars(0)).unwrap();
    assert_eq!(format!("{zero:?}"), "[((), 1)]");
    let none = b
        .jns_comp(
            "jns_test",
            "test1",
            &[HostValue::text("z")],
            QueryFlags::vars(2).with_set(true),
        )
        .unwrap();
    assert_eq!(format!("{none:?}"), "set()");
}

#[test]
fn set_comprehension_ignores_fact_order() {
    let facts = ["f(3).", "f(1).", "f(2).", "f(1)."];
    let mut seen = Vec::new();
    for rot in 0..facts.len() {
        let mut b = Bridge::new();
        let mut v = facts.to_vec();
        v.rotate_left(rot);
        b.consult_text("m", &v.join("\n")).unwrap();
        let r = b.jns_comp("m", "f", &[], QueryFlags::vars(1).with_set(true)).unwrap();
        seen.push(format!("{r:?}"));
    }
    assert!(
        seen.iter().all(|s| s == "{((1,), 1), ((2,), 1), ((3,), 1)}"),
        "{seen:?}"
    );
}

#[test]
fn qdet_and_cmd() {
    let mut b = bridge();
    let mut inner = indexmap::IndexMap::new();
    inner.insert(HashKey::text("b"), HostValue::text("c"));
    let mut outer = indexmap::IndexMap::new();
    outer.insert(HashKey::text("a"), HostValue::Map(inner));
    let input = vec![
        HostValue::Int(1),
        HostValue::Int(2),
        HostValue::Int(3),
        HostValue::Tuple(vec![HostValue::text("mytuple")]),
        HostValue::Map(outer),
    ];
    let (r, t) = b
        .jns_qdet("basics", "reverse", &[HostValue::Sequence(input.clone())])
        .unwrap();
    let mut expected = input;
    expected.reverse();
    assert_eq!(r, HostValue::Sequence(expected));
    assert_eq!(t, Truth::True);
    let (r, t) = b.jns_qdet("basics", "reverse", &[HostValue::Int(7)]).unwrap();
    assert_eq!((r, t), (HostValue::Null, Truth::False));

    b.consult_text("u", ":- table p/1.\np(X) :- X = 1, tnot(p(1)).\n")
        .unwrap();
    assert_eq!(
        b.jns_qdet("u", "p", &[]).unwrap(),
        (HostValue::Int(1), Truth::Undefined)
    );
    assert_eq!(
        b.jns_cmd("jns_test", "unk", &[HostValue::text("something")]).unwrap(),
        Truth::Undefined
    );
    let closed = [HostValue::text("a"), HostValue::text("b"), HostValue::Int(1)];
    assert_eq!(b.jns_cmd("jns_test", "test1", &closed).unwrap(), Truth::True);
    let wrong = [HostValue::text("a"), HostValue::text("b"), HostValue::Int(2)];
    assert_eq!(b.jns_cmd("jns_test", "test1", &wrong).unwrap(), Truth::False);
    let e = b.jns_cmd("jns_test", "nosuch", &[]).unwrap_err();
    assert_eq!(e.kind, ErrorKind::ExistenceError);
}

#[test]
fn command_strings() {
    let mut b = Bridge::new();
    b.consult_text(
        "jns_constraints",
        "check_entailed([[_ > _, _ > 0], [X > Y]]) :- X \\== Y.\nempty([]).\n",
    )
    .unwrap();
    let t = b
        .command_string("jns_constraints", "check_entailed", "[[X > 3*Y + 2,Y>0],[X > Y]]")
        .unwrap();
    assert_eq!(t, Truth::True);
    assert_eq!(b.command_string("jns_constraints", "empty", "[]").unwrap(), Truth::True);
    let e = b.command_string("jns_constraints", "empty", "[a,").unwrap_err();
    assert_eq!(e.kind, ErrorKind::SyntaxError);
    assert!(e.message.contains("character"));
}

#[test]
fn round_trip_callbacks() {
    let mut b = bridge();
    b.register_callback("rev", |ctx, args, _| {
        let (r, _) = ctx.jns_qdet("basics", "reverse", &args)?;
        Ok(r)
    });
    let a = solve1(&mut b, "pyfunc(callbacks, rev([1,2,3]), R)");
    assert_eq!(binding(&a, "R"), "[3,2,1]");

    b.consult_text("m", "down(N, R) :- pyfunc(callbacks, deep(N), R).\n")
        .unwrap();
    b.register_callback("deep", |ctx, args, _| {
        let n = args[0].as_int().unwrap();
        if n == 0 {
            return Ok(HostValue::Int(0));
        }
        let (r, _) = ctx.jns_qdet("m", "down", &[HostValue::Int(n - 1)])?;
        Ok(r)
    });
    let (r, _) = b
        .jns_qdet("m", "down", &[HostValue::Int(MAX_CALLBACK_DEPTH as i64 - 1)])
        .unwrap();
    assert_eq!(r, HostValue::Int(0));
    let e = b
        .jns_qdet("m", "down", &[HostValue::Int(MAX_CALLBACK_DEPTH as i64)])
        .unwrap_err();
    assert_eq!(e.kind, ErrorKind::NestingLimit);
    let e = b
        .solve("user", &parse_term("pyfunc(callbacks, nope(1), R)").unwrap())
        .unwrap_err();
    assert_eq!(e.kind, ErrorKind::NotCallable);
    let (r, _) = b.jns_qdet("m", "down", &[HostValue::Int(3)]).unwrap();
    assert_eq!(r, HostValue::Int(0));
}

#[test]
fn objects_from_the_logic_side() {
    let mut b = bridge();
    let base = b.live_count();
    let a = solve1(
        &mut b,
        "pyfunc(jns_demo, load_model('./lid.176.bin'), Obj), \
         pydot(Obj, predict('Janus is a really useful addition to Prolog!'), Lang), \
         pydot(Obj, path, P), pydot(Obj, predict('x'), [k=2], L2)",
    );
    assert_eq!(binding(&a, "Obj"), "pyObj(o1)");
    assert_eq!(binding(&a, "Lang"), "''('__label__en',0.9)");
    assert_eq!(binding(&a, "P"), "'./lid.176.bin'");
    assert_eq!(b.live_count(), base + 1);
    let obj = a.bindings[0].1.clone();
    b.free_object(&obj).unwrap();
    assert_eq!(b.live_count(), base);
    assert_eq!(b.free_object(&obj).unwrap_err().kind, ErrorKind::DanglingHandle);
    let e = b
        .pydot(&obj, &parse_term("predict(x)").unwrap(), &Term::nil())
        .unwrap_err();
    assert_eq!(e.kind, ErrorKind::DanglingHandle);

    let a = solve1(
        &mut b,
        "pyfunc(jns_demo, make_counter, C), pydot(C, increment, _), pydot(C, increment, _), \
         pydot(C, value, V), pydot(C, name, N), free_object(C)",
    );
    assert_eq!(binding(&a, "V"), "2");
    assert_eq!(binding(&a, "N"), "counter");
    assert_eq!(b.live_count(), base);
    let e = b.solve(
        "user",
        &parse_term("pyfunc(jns_demo, make_counter, C), pydot(C, nothing, X)").unwrap(),
    );
    assert_eq!(e.unwrap_err().kind, ErrorKind::NoSuchAttribute);
}

#[test]
fn errors_carry_both_sides() {
    let mut b = bridge();
    b.consult_text("m", "parse(S, V) :- pyfunc(json, loads(S), V).\n")
        .unwrap();
    let e = b.solve("m", &parse_term("parse('{', V)").unwrap()).unwrap_err();
    assert_eq!(e.origin, Origin::Host);
    assert_eq!(e.kind, ErrorKind::ValueError);
    assert_eq!(e.host_backtrace, vec!["in json.loads".to_string()]);
    assert!(e.logic_backtrace.iter().any(|f| f == "m:parse/2"));

    let kind = |b: &mut Bridge, g: &str| b.solve("user", &parse_term(g).unwrap()).unwrap_err().kind;
    assert_eq!(kind(&mut b, "pyfunc(nomod, f(1), X)"), ErrorKind::ModuleNotFound);
    assert!(b.host().runtime().last_error().is_some());
    assert_eq!(kind(&mut b, "pyfunc(M, f(1), X)"), ErrorKind::InstantiationError);
    assert_eq!(kind(&mut b, "pyfunc(json, loads(X), Y)"), ErrorKind::InstantiationError);
    assert_eq!(
        kind(&mut b, "pyfunc(json, dumps(1), [foo=1], Y)"),
        ErrorKind::UnknownKeyword
    );
    assert_eq!(kind(&mut b, "pyfunc(json, dumps(1), [foo], Y)"), ErrorKind::DomainError);
    assert_eq!(kind(&mut b, "pyfunc(json, dumps(f(x)), Y)"), ErrorKind::DomainError);
    assert_eq!(kind(&mut b, "pydot(3, f, Y)"), ErrorKind::TypeError);
    assert_eq!(kind(&mut b, "pydot(pyObj(o99), f, Y)"), ErrorKind::DanglingHandle);
    let a = solve1(&mut b, "pyfunc(math, sqrt(16), X)");
    assert_eq!(binding(&a, "X"), "4.0");
    assert!(b.host().runtime().last_error().is_none());
}

#[test]
fn results_unify_with_bound_outputs() {
    let mut b = bridge();
    assert_eq!(
        b.solve("user", &parse_term("pyfunc(math, sqrt(16), 4.0)").unwrap())
            .unwrap()
            .len(),
        1
    );
    assert!(b
        .solve("user", &parse_term("pyfunc(math, sqrt(16), 5.0)").unwrap())
        .unwrap()
        .is_empty());
}
