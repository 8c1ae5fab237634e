//! Logic-side terms: atoms, numbers, variables and compounds.
//!
//! Lists are `'.'/2` chains terminated by the atom `[]`. Terms are immutable
//! and cheap to clone; compound nodes are reference counted and may be shared
//! across threads.
//!
//! Every traversal in this module recurses on all but the last argument and
//! loops on the last one, so long lists never grow the native stack.

mod reader;
mod symbol;
mod writer;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

pub use reader::{parse_term, parse_term_with_vars, read_clauses, ParsedTerm, SyntaxError};
pub use symbol::Sym;
pub use writer::{format_float, write_atom, write_term};

/// Largest arity a compound may have.
pub const MAX_ARITY: usize = 65535;

/// A logic variable. The display name is informational only: two variables
/// are the same variable iff their ids match.
#[derive(Clone, Copy)]
pub struct Var {
    pub id: u32,
    pub name: Option<Sym>,
}

impl Var {
    pub fn new(id: u32) -> Var {
        Var { id, name: None }
    }

    pub fn named(id: u32, name: Sym) -> Var {
        Var { id, name: Some(name) }
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Var {}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name {
            Some(n) => write!(f, "{}_{}", n, self.id),
            None => write!(f, "_{}", self.id),
        }
    }
}

pub struct Compound {
    functor: Sym,
    args: Box<[Term]>,
}

impl Compound {
    pub fn functor(&self) -> Sym {
        self.functor
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

impl Drop for Compound {
    // Iterative teardown: a million-element list must not recurse a million deep.
    fn drop(&mut self) {
        let mut pending: Vec<Arc<Compound>> = Vec::new();
        detach_children(&mut self.args, &mut pending);
        while let Some(node) = pending.pop() {
            if let Ok(mut inner) = Arc::try_unwrap(node) {
                detach_children(&mut inner.args, &mut pending);
            }
        }
    }
}

fn detach_children(args: &mut [Term], pending: &mut Vec<Arc<Compound>>) {
    for arg in args.iter_mut() {
        if let Term::Compound(_) = arg {
            if let Term::Compound(c) = std::mem::replace(arg, Term::Int(0)) {
                pending.push(c);
            }
        }
    }
}

#[derive(Clone)]
pub enum Term {
    Atom(Sym),
    Int(i64),
    Float(f64),
    Var(Var),
    Compound(Arc<Compound>),
}

/// Well-known atoms.
pub mod atoms {
    use super::Sym;
    use std::sync::OnceLock;

    macro_rules! well_known {
        ($($fn_name:ident => $text:expr),* $(,)?) => {
            $(
                pub fn $fn_name() -> Sym {
                    static CELL: OnceLock<Sym> = OnceLock::new();
                    *CELL.get_or_init(|| Sym::intern($text))
                }
            )*
        };
    }

    well_known! {
        nil => "[]",
        dot => ".",
        comma => ",",
        semicolon => ";",
        colon => ":",
        neck => ":-",
        empty => "",
        tnot => "tnot",
        true_ => "true",
        fail => "fail",
        eq => "=",
        minus => "-",
        slash => "/",
    }
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(Sym::intern(name))
    }

    pub fn nil() -> Term {
        Term::Atom(atoms::nil())
    }

    pub fn var(id: u32) -> Term {
        Term::Var(Var::new(id))
    }

    /// Builds a compound. Panics on arity 0 or above [`MAX_ARITY`]; use
    /// [`Term::try_compound`] when the arity comes from outside.
    pub fn compound(functor: Sym, args: Vec<Term>) -> Term {
        Term::try_compound(functor, args).expect("compound arity must be within 1..=65535")
    }

    pub fn try_compound(functor: Sym, args: Vec<Term>) -> Option<Term> {
        if args.is_empty() || args.len() > MAX_ARITY {
            return None;
        }
        Some(Term::Compound(Arc::new(Compound {
            functor,
            args: args.into_boxed_slice(),
        })))
    }

    pub fn compound_str(functor: &str, args: Vec<Term>) -> Term {
        Term::compound(Sym::intern(functor), args)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::compound(atoms::dot(), vec![head, tail])
    }

    /// Proper list from items.
    pub fn list(items: impl IntoIterator<Item = Term, IntoIter: DoubleEndedIterator>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn list_with_tail(items: impl IntoIterator<Item = Term, IntoIter: DoubleEndedIterator>, tail: Term) -> Term {
        items.into_iter().rev().fold(tail, |acc, item| Term::cons(item, acc))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Term::Atom(s) if *s == atoms::nil())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_callable(&self) -> bool {
        matches!(self, Term::Atom(_) | Term::Compound(_))
    }

    pub fn is_number(&self) -> bool {
        matches!(self, Term::Int(_) | Term::Float(_))
    }

    pub fn as_atom(&self) -> Option<Sym> {
        match self {
            Term::Atom(s) => Some(*s),
            _ => None,
        }
    }

    pub fn as_compound(&self) -> Option<&Compound> {
        match self {
            Term::Compound(c) => Some(c),
            _ => None,
        }
    }

    /// Head and tail when this is a list cell.
    pub fn as_cons(&self) -> Option<(&Term, &Term)> {
        match self {
            Term::Compound(c) if c.functor == atoms::dot() && c.args.len() == 2 => Some((&c.args[0], &c.args[1])),
            _ => None,
        }
    }

    /// Name and arity for callable terms.
    pub fn functor(&self) -> Option<(Sym, usize)> {
        match self {
            Term::Atom(s) => Some((*s, 0)),
            Term::Compound(c) => Some((c.functor, c.args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(c) => &c.args,
            _ => &[],
        }
    }

    /// Elements of a proper list, or `None` if the chain ends in anything but `[]`.
    pub fn list_items(&self) -> Option<Vec<Term>> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            if cur.is_nil() {
                return Some(items);
            }
            let (h, t) = cur.as_cons()?;
            items.push(h.clone());
            cur = t;
        }
    }

    /// Walks the tail chain; terminates on any finite term.
    pub fn is_proper_list(&self) -> bool {
        let mut cur = self;
        loop {
            if cur.is_nil() {
                return true;
            }
            match cur.as_cons() {
                Some((_, t)) => cur = t,
                None => return false,
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        let mut cur = self;
        loop {
            match cur {
                Term::Var(_) => return false,
                Term::Compound(c) => {
                    let (last, init) = c.args.split_last().expect("arity >= 1");
                    if !init.iter().all(Term::is_ground) {
                        return false;
                    }
                    cur = last;
                }
                _ => return true,
            }
        }
    }

    /// Distinct variables in depth-first, left-to-right order of first occurrence.
    pub fn variables(&self) -> Vec<Var> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Var(v) => {
                    if seen.insert(v.id) {
                        out.push(*v);
                    }
                }
                Term::Compound(c) => stack.extend(c.args.iter().rev()),
                _ => {}
            }
        }
        out
    }

    /// Nesting depth: atomic terms have depth 1.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self, 1usize)];
        while let Some((t, d)) = stack.pop() {
            best = best.max(d);
            if let Term::Compound(c) = t {
                stack.extend(c.args.iter().map(|a| (a, d + 1)));
            }
        }
        best
    }
}

fn kind_rank(t: &Term) -> u8 {
    match t {
        Term::Var(_) => 0,
        Term::Int(_) | Term::Float(_) => 1,
        Term::Atom(_) => 2,
        Term::Compound(_) => 3,
    }
}

/// Exact comparison of an integer with a float.
fn cmp_int_float(i: i64, f: f64) -> Ordering {
    if f.is_nan() {
        return Ordering::Less;
    }
    // i64 -> f64 may round; compare in the float domain first and break
    // near-ties with exact integer arithmetic.
    let fi = i as f64;
    match fi.partial_cmp(&f).unwrap() {
        Ordering::Equal => {
            if f >= 9.223_372_036_854_775_807e18 {
                Ordering::Less
            } else if f < -9.223_372_036_854_775_808e18 {
                Ordering::Greater
            } else {
                let fl = f as i64;
                match i.cmp(&fl) {
                    Ordering::Equal => {
                        let frac = f - fl as f64;
                        if frac > 0.0 {
                            Ordering::Less
                        } else if frac < 0.0 {
                            Ordering::Greater
                        } else {
                            Ordering::Equal
                        }
                    }
                    o => o,
                }
            }
        }
        o => o,
    }
}

/// The standard order of terms: Var < numbers < atoms < compounds.
///
/// Numbers compare by value with Int before Float on ties; atoms by name;
/// compounds by arity, then functor name, then arguments left to right.
pub fn compare_terms(a: &Term, b: &Term) -> Ordering {
    let (mut a, mut b) = (a, b);
    loop {
        let (ra, rb) = (kind_rank(a), kind_rank(b));
        if ra != rb {
            return ra.cmp(&rb);
        }
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => return x.id.cmp(&y.id),
            (Term::Int(x), Term::Int(y)) => return x.cmp(y),
            (Term::Float(x), Term::Float(y)) => return x.total_cmp(y),
            (Term::Int(x), Term::Float(y)) => {
                return cmp_int_float(*x, *y).then(Ordering::Less);
            }
            (Term::Float(x), Term::Int(y)) => {
                return cmp_int_float(*y, *x).reverse().then(Ordering::Greater);
            }
            (Term::Atom(x), Term::Atom(y)) => return x.cmp(y),
            (Term::Compound(x), Term::Compound(y)) => {
                if Arc::ptr_eq(x, y) {
                    return Ordering::Equal;
                }
                let o = x.args.len().cmp(&y.args.len()).then_with(|| x.functor.cmp(&y.functor));
                if o != Ordering::Equal {
                    return o;
                }
                let n = x.args.len();
                for i in 0..n - 1 {
                    let o = compare_terms(&x.args[i], &y.args[i]);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a = &x.args[n - 1];
                b = &y.args[n - 1];
            }
            _ => unreachable!("kind ranks matched"),
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        compare_terms(self, other) == Ordering::Equal
    }
}

impl Eq for Term {}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(compare_terms(self, other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_terms(self, other)
    }
}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let mut cur = self;
        loop {
            match cur {
                Term::Var(v) => {
                    state.write_u8(0);
                    state.write_u32(v.id);
                    return;
                }
                Term::Int(i) => {
                    state.write_u8(1);
                    state.write_i64(*i);
                    return;
                }
                Term::Float(f) => {
                    state.write_u8(2);
                    state.write_u64(f.to_bits());
                    return;
                }
                Term::Atom(s) => {
                    state.write_u8(3);
                    state.write_u32(s.index());
                    return;
                }
                Term::Compound(c) => {
                    state.write_u8(4);
                    state.write_u32(c.functor.index());
                    state.write_usize(c.args.len());
                    let (last, init) = c.args.split_last().expect("arity >= 1");
                    for a in init {
                        a.hash(state);
                    }
                    cur = last;
                }
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_term(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_term(self))
    }
}

impl From<i64> for Term {
    fn from(v: i64) -> Term {
        Term::Int(v)
    }
}

impl From<f64> for Term {
    fn from(v: f64) -> Term {
        Term::Float(v)
    }
}

impl From<&str> for Term {
    fn from(v: &str) -> Term {
        Term::atom(v)
    }
}

/// A program clause. Variables are numbered `0..var_count` within the clause.
#[derive(Clone, Debug)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Term>,
    pub var_count: u32,
}

impl Clause {
    pub fn fact(head: Term) -> Clause {
        let var_count = head.variables().iter().map(|v| v.id + 1).max().unwrap_or(0);
        Clause {
            head,
            body: Vec::new(),
            var_count,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(name: &str, args: Vec<Term>) -> Term {
        Term::compound_str(name, args)
    }

    #[test]
    fn int_sorts_before_equal_float() {
        assert_eq!(compare_terms(&Term::Int(1), &Term::Float(1.0)), Ordering::Less);
        assert_eq!(compare_terms(&Term::Float(1.0), &Term::Int(1)), Ordering::Greater);
        assert_eq!(compare_terms(&Term::Int(2), &Term::Float(1.5)), Ordering::Greater);
        assert_eq!(compare_terms(&Term::Float(0.5), &Term::Int(1)), Ordering::Less);
    }

    #[test]
    fn kinds_are_ordered() {
        let v = Term::var(0);
        let n = Term::Int(100);
        let a = Term::atom("a");
        let c = f("f", vec![Term::atom("x")]);
        assert!(v < n && n < a && a < c);
    }

    #[test]
    fn compounds_order_by_arity_then_name_then_args() {
        let g1 = f("g", vec![Term::Int(1)]);
        let f2 = f("f", vec![Term::Int(1), Term::Int(2)]);
        assert!(g1 < f2);
        let a1 = f("a", vec![Term::Int(9)]);
        assert!(a1 < g1);
        let g2 = f("g", vec![Term::Int(2)]);
        assert!(g1 < g2);
    }

    #[test]
    fn int_float_comparison_is_exact_near_large_values() {
        let big = i64::MAX;
        assert_eq!(cmp_int_float(big, 9.223_372_036_854_775_807e18), Ordering::Less);
        assert_eq!(cmp_int_float(1 << 53, (1u64 << 53) as f64), Ordering::Equal);
        assert_eq!(cmp_int_float((1 << 53) + 1, (1u64 << 53) as f64), Ordering::Greater);
    }

    #[test]
    fn long_lists_drop_and_compare_without_overflow() {
        let a = Term::list((0..1_000_000).map(Term::Int));
        let b = Term::list((0..1_000_000).map(Term::Int));
        assert_eq!(a, b);
        assert!(a.is_proper_list());
        assert!(a.is_ground());
        let mut h1 = std::collections::hash_map::DefaultHasher::new();
        a.hash(&mut h1);
        drop(a);
        drop(b);
    }

    #[test]
    fn list_helpers() {
        let l = Term::list(vec![Term::Int(1), Term::Int(2)]);
        assert_eq!(l.list_items().unwrap(), vec![Term::Int(1), Term::Int(2)]);
        let partial = Term::list_with_tail(vec![Term::Int(1)], Term::var(3));
        assert!(partial.list_items().is_none());
        assert!(!partial.is_proper_list());
        assert_eq!(partial.variables(), vec![Var::new(3)]);
    }

    #[test]
    fn arity_bounds() {
        assert!(Term::try_compound(Sym::intern("f"), vec![]).is_none());
        assert!(Term::try_compound(Sym::intern("f"), vec![Term::Int(0); MAX_ARITY]).is_some());
        assert!(Term::try_compound(Sym::intern("f"), vec![Term::Int(0); MAX_ARITY + 1]).is_none());
    }
}
