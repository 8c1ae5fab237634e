use super::*;
use crate::term::parse_term;

const JNS_TEST: &str = "
test1(a,b,1).
test1(a,c,2).
test1(a,d,5) :- tnot(unk(something)).
:- table unk/1.
unk(X) :- tnot(unk(X)).
";

fn engine_with(module: &str, text: &str) -> Engine {
    let mut e = Engine::new();
    e.consult_text(module, text).unwrap();
    e
}

fn goal(text: &str) -> Term {
    parse_term(text).unwrap()
}

fn show(answers: &[Answer]) -> Vec<String> {
    answers
        .iter()
        .map(|a| {
            let res: Vec<String> = a.residual.iter().map(|t| t.to_string()).collect();
            format!("{} {} [{}]", a.goal, a.truth.code(), res.join(","))
        })
        .collect()
}

#[test]
fn consult_records_clauses_and_tables() {
    let e = engine_with("jns_test", JNS_TEST);
    assert_eq!(e.clause_count("jns_test", "test1", 3), 3);
    assert!(e.is_tabled("jns_test", "unk", 1));
    assert!(!e.is_tabled("jns_test", "test1", 3));
    let mut empty = Engine::new();
    empty.consult_text("m", "").unwrap();
    assert!(!empty.is_defined("m", "anything", 0));
}

#[test]
fn solve_reports_truth_values() {
    let e = engine_with("jns_test", JNS_TEST);
    let answers = e.solve("jns_test", &goal("test1(a,V1,V2)"), &mut NoForeign).unwrap();
    assert_eq!(
        show(&answers),
        vec![
            "test1(a,b,1) 1 []",
            "test1(a,c,2) 1 []",
            "test1(a,d,5) 2 [tnot(unk(something))]"
        ]
    );
}

#[test]
fn wfs_evaluate_through_meta_table_matches_solve() {
    let e = engine_with("jns_test", JNS_TEST);
    let answers = e
        .wfs_evaluate("jns_test", &goal("test1(a,V1,V2)"), &mut NoForeign)
        .unwrap();
    assert_eq!(
        show(&answers),
        vec![
            "test1(a,b,1) 1 []",
            "test1(a,c,2) 1 []",
            "test1(a,d,5) 2 [tnot(unk(something))]"
        ]
    );
    assert_eq!(answers[0].bindings[0].1, Term::atom("b"));
}

#[test]
fn self_negation_is_undefined_with_residual() {
    let e = engine_with("jns_test", JNS_TEST);
    let answers = e
        .wfs_evaluate("jns_test", &goal("unk(something)"), &mut NoForeign)
        .unwrap();
    assert_eq!(show(&answers), vec!["unk(something) 2 [tnot(unk(something))]"]);
}

const WIN: &str = ":- table win/1.\nwin(X) :- move(X,Y), tnot(win(Y)).\n";

#[test]
fn win_over_a_chain() {
    let e = engine_with("g", &format!("{WIN}move(a,b).\nmove(b,c).\n"));
    let answers = e.wfs_evaluate("g", &goal("win(X)"), &mut NoForeign).unwrap();
    assert_eq!(show(&answers), vec!["win(b) 1 []"]);
    for absent in ["win(a)", "win(c)"] {
        assert!(e.wfs_evaluate("g", &goal(absent), &mut NoForeign).unwrap().is_empty());
    }
}

#[test]
fn win_over_a_cycle() {
    let e = engine_with("g", &format!("{WIN}move(a,b).\nmove(b,a).\n"));
    let answers = e.wfs_evaluate("g", &goal("win(X)"), &mut NoForeign).unwrap();
    assert_eq!(
        show(&answers),
        vec!["win(a) 2 [tnot(win(b))]", "win(b) 2 [tnot(win(a))]"]
    );
}

#[test]
fn tabling_terminates_on_left_recursion() {
    let e = engine_with(
        "g",
        ":- table path/2.\npath(X,Y) :- path(X,Z), edge(Z,Y).\npath(X,Y) :- edge(X,Y).\nedge(a,b). edge(b,c). edge(c,a).\n",
    );
    let answers = e.solve("g", &goal("path(a,Y)"), &mut NoForeign).unwrap();
    let mut ys: Vec<String> = answers.iter().map(|a| a.bindings[0].1.to_string()).collect();
    ys.sort();
    assert_eq!(ys, vec!["a", "b", "c"]);
    assert!(answers.iter().all(|a| a.truth == Truth::True));
}

#[test]
fn reverse_in_a_module() {
    let e = engine_with(
        "basics",
        "reverse([],[]).\nreverse([H|T],R) :- reverse(T,RT), append(RT,[H],R).\n",
    );
    let answers = e.solve("basics", &goal("reverse([1,2,3],R)"), &mut NoForeign).unwrap();
    // Oracle: the host reverses the same list.
    let mut expected = vec![1, 2, 3];
    expected.reverse();
    let expected = Term::list(expected.into_iter().map(Term::Int));
    assert_eq!(answers.len(), 1);
    assert_eq!(answers[0].bindings[0].1, expected);
    assert_eq!(answers[0].truth, Truth::True);
    let qualified = e.solve("user", &goal("basics:reverse([a],R)"), &mut NoForeign).unwrap();
    assert_eq!(qualified[0].bindings[0].1.to_string(), "[a]");
}

#[test]
fn findall_collects_in_order() {
    let e = engine_with("jns_test", JNS_TEST);
    let l = e
        .findall_terms("jns_test", &goal("X-Y"), &goal("test1(a,X,Y)"), &mut NoForeign)
        .unwrap();
    assert_eq!(l.to_string(), "[b - 1,c - 2,d - 5]");
    let none = e
        .findall_terms("jns_test", &goal("X"), &goal("fail"), &mut NoForeign)
        .unwrap();
    assert_eq!(none, Term::nil());
    let a = e
        .solve("jns_test", &goal("findall(X, member(X,[3,1,2]), L)"), &mut NoForeign)
        .unwrap();
    assert_eq!(a[0].bindings[1].1.to_string(), "[3,1,2]");
}

#[test]
fn builtins() {
    let e = Engine::new();
    let one = |g: &str| e.solve("user", &goal(g), &mut NoForeign).unwrap().len();
    assert_eq!(one("X is 2 + 3 * 4, X =:= 14"), 1);
    assert_eq!(one("f(X,b) = f(a,Y), X == a, Y == b"), 1);
    assert_eq!(one("a \\= b"), 1);
    assert_eq!(one("a \\= a"), 0);
    assert_eq!(one("(X = 1 ; X = 2 ; X = 3), X > 1"), 2);
    assert_eq!(one("between(1, 10, X)"), 10);
    assert_eq!(one("length([a,b,c], 3)"), 1);
    assert_eq!(one("call(member(X), [a,b])"), 2);
    assert_eq!(one("\\+ member(z, [a,b])"), 1);
    assert_eq!(one("fail"), 0);
    assert_eq!(one("true"), 1);
}

#[test]
fn error_kinds() {
    let e = engine_with("jns_test", JNS_TEST);
    let kind = |g: &str| e.solve("jns_test", &goal(g), &mut NoForeign).unwrap_err().kind;
    assert_eq!(kind("nosuch(1)"), ErrorKind::ExistenceError);
    assert_eq!(kind("X is foo + 1"), ErrorKind::TypeError);
    assert_eq!(kind("X is Y + 1"), ErrorKind::InstantiationError);
    assert_eq!(kind("tnot(test1(a,b,1))"), ErrorKind::PermissionError);
    assert_eq!(kind("tnot(unk(X))"), ErrorKind::Floundering);
    assert_eq!(kind("call(X)"), ErrorKind::InstantiationError);
    assert_eq!(kind("pyfunc(json, loads('{}'), R)"), ErrorKind::ExistenceError);
}

#[test]
fn errors_carry_a_logic_backtrace() {
    let e = engine_with("m", "p(X) :- q(X).\nq(X) :- X is foo.\n");
    let err = e.solve("m", &goal("p(Y)"), &mut NoForeign).unwrap_err();
    assert_eq!(err.logic_backtrace[1], "m:q/1");
    assert_eq!(err.logic_backtrace[2], "m:p/1");
}

#[test]
fn budget_bounds_runaway_recursion() {
    let mut e = Engine::with_config(EngineConfig {
        budget: 10_000,
        occurs_check: false,
    });
    e.consult_text("m", "loop :- loop.\n").unwrap();
    let err = e.solve("m", &goal("loop"), &mut NoForeign).unwrap_err();
    assert_eq!(err.kind, ErrorKind::BudgetExceeded);
}

#[test]
fn infinite_grounding_exceeds_budget() {
    let mut e = Engine::with_config(EngineConfig {
        budget: 100_000,
        occurs_check: false,
    });
    e.consult_text("m", ":- table nat/1.\nnat(z).\nnat(s(X)) :- nat(X).\n")
        .unwrap();
    let err = e.wfs_evaluate("m", &goal("nat(X)"), &mut NoForeign).unwrap_err();
    assert_eq!(err.kind, ErrorKind::BudgetExceeded);
}

#[test]
fn long_deterministic_recursion_is_stack_safe() {
    let e = engine_with("m", "count(0) :- !.\n".replace("!", "true").as_str());
    let mut e2 = e;
    e2.consult_text("m", "count(N) :- N > 0, M is N - 1, count(M).\n")
        .unwrap();
    let answers = e2.solve("m", &goal("count(200000)"), &mut NoForeign).unwrap();
    assert_eq!(answers.len(), 1);
    let long = e2.solve("m", &goal("length(L, 100000)"), &mut NoForeign);
    // length/2 enumerates on an unbound list; the first answer suffices.
    drop(long);
}

#[test]
fn consult_errors_leave_kb_unchanged() {
    let mut e = Engine::new();
    let err = e.consult_text("m", "p(1).\np(2) :- .\n").unwrap_err();
    assert_eq!(err.kind, ErrorKind::SyntaxError);
    assert!(err.message.starts_with("clause 1"));
    assert!(!e.is_defined("m", "p", 1));
    assert_eq!(
        e.consult_text("m", "1 :- true.").unwrap_err().kind,
        ErrorKind::TypeError
    );
    assert_eq!(
        e.consult_text("m", "X = 1.").unwrap_err().kind,
        ErrorKind::PermissionError
    );
}

#[test]
fn solve_is_deterministic() {
    let e = engine_with("jns_test", JNS_TEST);
    let a = show(&e.solve("jns_test", &goal("test1(X,Y,Z)"), &mut NoForeign).unwrap());
    let b = show(&e.solve("jns_test", &goal("test1(X,Y,Z)"), &mut NoForeign).unwrap());
    assert_eq!(a, b);
}

#[test]
fn first_argument_indexing_leaves_no_choicepoint() {
    let e = engine_with("m", "f(a, 1).\nf(b, 2).\nf(c, 3).\n");
    let mut nf = NoForeign;
    let mut q = e.query("m", &goal("f(c, X)"), &mut nf);
    let first = q.next().unwrap().unwrap();
    assert_eq!(first.bindings[0].1, Term::Int(3));
    assert!(q.next().is_none());
}
