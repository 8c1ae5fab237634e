use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;
use proptest::prelude::*;

use janus_core::bridge::Bridge;
use janus_core::engine::store::Store;
use janus_core::engine::{Engine, NoForeign, Truth};
use janus_core::host::{HashKey, HostValue};
use janus_core::runtime::Kwargs;
use janus_core::term::{compare_terms, parse_term, Sym, Term, Var};

const VARS: u32 = 4;

fn term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0..VARS).prop_map(Term::var),
        (-20i64..20).prop_map(Term::Int),
        prop_oneof![(-20i32..20).prop_map(|i| i as f64), -20.0f64..20.0].prop_map(Term::Float),
        prop::sample::select(vec!["a", "b", "[]", "", "zz"]).prop_map(Term::atom),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["f", "g", ""]), prop::collection::vec(inner.clone(), 1..4))
                .prop_map(|(f, args)| Term::compound_str(f, args)),
            prop::collection::vec(inner, 0..3).prop_map(Term::list),
        ]
    })
}

fn rank(t: &Term) -> u8 {
    match t {
        Term::Var(_) => 0,
        Term::Int(_) | Term::Float(_) => 1,
        Term::Atom(_) => 2,
        Term::Compound(_) => 3,
    }
}

/// Reference ordering: variables, then numbers by value with integers first
/// on ties, then atoms by name, then compounds by arity, name and arguments.
fn reference_cmp(a: &Term, b: &Term) -> Ordering {
    if rank(a) != rank(b) {
        return rank(a).cmp(&rank(b));
    }
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => x.id.cmp(&y.id),
        (Term::Int(x), Term::Int(y)) => x.cmp(y),
        (Term::Float(x), Term::Float(y)) => x.partial_cmp(y).unwrap(),
        (Term::Int(x), Term::Float(y)) => (*x as f64).partial_cmp(y).unwrap().then(Ordering::Less),
        (Term::Float(x), Term::Int(y)) => x.partial_cmp(&(*y as f64)).unwrap().then(Ordering::Greater),
        (Term::Atom(x), Term::Atom(y)) => x.as_str().cmp(y.as_str()),
        (Term::Compound(x), Term::Compound(y)) => x
            .arity()
            .cmp(&y.arity())
            .then_with(|| x.functor().as_str().cmp(y.functor().as_str()))
            .then_with(|| {
                x.args()
                    .iter()
                    .zip(y.args())
                    .map(|(p, q)| reference_cmp(p, q))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            }),
        _ => unreachable!(),
    }
}

type Subst = HashMap<u32, Term>;

fn walk(t: &Term, s: &Subst) -> Term {
    let mut t = t.clone();
    while let Term::Var(v) = &t {
        match s.get(&v.id) {
            Some(b) => t = b.clone(),
            None => break,
        }
    }
    t
}

fn apply(t: &Term, s: &Subst) -> Term {
    match walk(t, s) {
        Term::Compound(c) => Term::compound(c.functor(), c.args().iter().map(|a| apply(a, s)).collect()),
        other => other,
    }
}

fn occurs(id: u32, t: &Term, s: &Subst) -> bool {
    match walk(t, s) {
        Term::Var(v) => v.id == id,
        Term::Compound(c) => c.args().iter().any(|a| occurs(id, a, s)),
        _ => false,
    }
}

fn atomic_eq(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Int(x), Term::Int(y)) => x == y,
        (Term::Float(x), Term::Float(y)) => x.to_bits() == y.to_bits(),
        (Term::Atom(x), Term::Atom(y)) => x == y,
        _ => false,
    }
}

/// Robinson unification with the occurs check.
fn naive_mgu(a: &Term, b: &Term) -> Option<Subst> {
    let mut s = Subst::new();
    let mut work = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = work.pop() {
        match (walk(&x, &s), walk(&y, &s)) {
            (Term::Var(v), Term::Var(w)) if v.id == w.id => {}
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                if occurs(v.id, &t, &s) {
                    return None;
                }
                s.insert(v.id, t);
            }
            (Term::Compound(p), Term::Compound(q)) => {
                if p.functor() != q.functor() || p.arity() != q.arity() {
                    return None;
                }
                work.extend(p.args().iter().cloned().zip(q.args().iter().cloned()));
            }
            (p, q) => {
                if !atomic_eq(&p, &q) {
                    return None;
                }
            }
        }
    }
    Some(s)
}

fn variant(a: &Term, b: &Term) -> bool {
    fn go(a: &Term, b: &Term, fwd: &mut HashMap<u32, u32>, back: &mut HashMap<u32, u32>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                *fwd.entry(x.id).or_insert(y.id) == y.id && *back.entry(y.id).or_insert(x.id) == x.id
            }
            (Term::Compound(x), Term::Compound(y)) => {
                x.functor() == y.functor()
                    && x.arity() == y.arity()
                    && x.args().iter().zip(y.args()).all(|(p, q)| go(p, q, fwd, back))
            }
            _ => atomic_eq(a, b),
        }
    }
    go(a, b, &mut HashMap::new(), &mut HashMap::new())
}

/// Acyclic definite program over p(0)..p(n-1): bodies only mention atoms
/// numbered above the head.
fn definite_program() -> impl Strategy<Value = (usize, Vec<(usize, Vec<usize>)>)> {
    (2usize..10).prop_flat_map(|n| {
        let rule = (0..n - 1).prop_flat_map(move |head| (Just(head), prop::collection::vec(head + 1..n, 0..3)));
        (Just(n), prop::collection::vec(rule, 1..15))
    })
}

fn least_model(n: usize, rules: &[(usize, Vec<usize>)]) -> BTreeSet<i64> {
    let mut model = vec![false; n];
    loop {
        let mut changed = false;
        for (h, body) in rules {
            if !model[*h] && body.iter().all(|&b| model[b]) {
                model[*h] = true;
                changed = true;
            }
        }
        if !changed {
            return (0..n).filter(|&i| model[i]).map(|i| i as i64).collect();
        }
    }
}

fn program_text(rules: &[(usize, Vec<usize>)]) -> String {
    let mut out = String::from("p(-1) :- fail.\n");
    for (h, body) in rules {
        if body.is_empty() {
            out.push_str(&format!("p({h}).\n"));
        } else {
            let lits: Vec<String> = body.iter().map(|b| format!("p({b})")).collect();
            out.push_str(&format!("p({h}) :- {}.\n", lits.join(", ")));
        }
    }
    out
}

fn json_value() -> impl Strategy<Value = HostValue> {
    let leaf = prop_oneof![
        Just(HostValue::Null),
        any::<i64>().prop_map(HostValue::Int),
        any::<f64>().prop_filter("finite", |f| f.is_finite()).prop_map(HostValue::Float),
        "\\PC{0,8}".prop_map(HostValue::Text),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(HostValue::Sequence),
            prop::collection::vec(("[a-z]{0,4}", inner), 0..4).prop_map(|entries| {
                let map: IndexMap<HashKey, HostValue> =
                    entries.into_iter().map(|(k, v)| (HashKey::text(&k), v)).collect();
                HostValue::Map(map)
            }),
        ]
    })
}

fn same_value(a: &HostValue, b: &HostValue) -> bool {
    match (a, b) {
        (HostValue::Null, HostValue::Null) => true,
        (HostValue::Int(x), HostValue::Int(y)) => x == y,
        (HostValue::Float(x), HostValue::Float(y)) => x.to_bits() == y.to_bits(),
        (HostValue::Text(x), HostValue::Text(y)) => x == y,
        (HostValue::Sequence(x), HostValue::Sequence(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same_value(p, q))
        }
        (HostValue::Map(x), HostValue::Map(y)) => {
            x.len() == y.len()
                && x.iter().zip(y).all(|((k, v), (j, w))| same_value(k.value(), j.value()) && same_value(v, w))
        }
        _ => false,
    }
}

proptest! {
    #[test]
    fn ordering_matches_reference(a in term(), b in term()) {
        prop_assert_eq!(compare_terms(&a, &b), reference_cmp(&a, &b));
        prop_assert_eq!(compare_terms(&b, &a), reference_cmp(&a, &b).reverse());
    }

    #[test]
    fn ordering_is_transitive(mut ts in prop::collection::vec(term(), 3..8)) {
        ts.sort_by(compare_terms);
        for w in ts.windows(2) {
            prop_assert_ne!(reference_cmp(&w[0], &w[1]), Ordering::Greater);
        }
    }

    #[test]
    fn unify_agrees_with_naive_mgu(a in term(), b in term()) {
        let mut store = Store::new(VARS, true);
        let ok = store.unify(&a, &b);
        let mgu = naive_mgu(&a, &b);
        prop_assert_eq!(ok, mgu.is_some());
        if let Some(s) = mgu {
            let ra = store.resolve(&a);
            prop_assert!(variant(&ra, &store.resolve(&b)));
            prop_assert!(variant(&ra, &apply(&a, &s)), "{} vs {}", ra, apply(&a, &s));
        }
    }

    #[test]
    fn sld_and_wfs_agree_on_definite_programs((n, rules) in definite_program()) {
        let mut e = Engine::new();
        e.consult_text("d", &program_text(&rules)).unwrap();
        let goal = parse_term("p(X)").unwrap();
        let atom_of = |t: &Term| match t.args() {
            [Term::Int(i)] => *i,
            _ => panic!("unexpected answer {t}"),
        };
        let sld: BTreeSet<i64> = e.solve("d", &goal, &mut NoForeign).unwrap().iter().map(|a| atom_of(&a.goal)).collect();
        let wfs = e.wfs_evaluate("d", &goal, &mut NoForeign).unwrap();
        prop_assert!(wfs.iter().all(|a| a.truth == Truth::True && a.residual.is_empty()));
        let wfs: BTreeSet<i64> = wfs.iter().map(|a| atom_of(&a.goal)).collect();
        let want = least_model(n, &rules);
        prop_assert_eq!(&sld, &want);
        prop_assert_eq!(&wfs, &want);
    }

    #[test]
    fn json_dumps_then_loads_is_identity(v in json_value()) {
        let mut b = Bridge::new();
        let text = b.call_host("json", "dumps", vec![v.clone()], Kwargs::new()).unwrap();
        let back = b.call_host("json", "loads", vec![text.clone()], Kwargs::new()).unwrap();
        prop_assert!(same_value(&back, &v), "{:?} -> {:?} -> {:?}", v, text, back);
    }
}

#[test]
fn reference_helpers_behave() {
    let x = Term::Var(Var::named(0, Sym::intern("X")));
    let fx = Term::compound_str("f", vec![x.clone()]);
    assert!(naive_mgu(&x, &fx).is_none());
    assert_eq!(reference_cmp(&Term::Int(1), &Term::Float(1.0)), Ordering::Less);
}
