//! Bi-translation between logic terms and host values.
//!
//! Term to value: integers, floats and atoms map to their host forms, `[]`
//! and proper lists to sequences, `''/n` to tuples, `pyDict/1` over a list of
//! `''(K,V)` pairs to maps, `pySet/1` to sets and `pyObj/1` to object
//! references. Any other compound is a domain error. Value to term is the
//! inverse, with host `Null` written as the atom `pyNone`.
//!
//! Both directions walk the input with an explicit frame stack, so nesting
//! depth is bounded by [`XlateConfig::depth_limit`] rather than by the
//! native stack.

use std::cmp::Ordering;

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

use crate::host::{HashKey, HostValue, ObjectHandle, Registry, MAX_TUPLE_ARITY};
use crate::term::{atoms, compare_terms, Sym, Term};

/// Atom standing for host `Null`.
pub const NONE_ATOM: &str = "pyNone";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum XlateError {
    #[error("instantiation error: unbound variable in translated term")]
    Instantiation,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dangling object handle {0}")]
    DanglingHandle(String),
    #[error("limit exceeded: {0}")]
    Limit(String),
    #[error("nesting depth exceeds limit {0}")]
    DepthLimit(usize),
}

/// Liveness check for object handles met during translation.
pub trait HandleTable {
    fn is_live(&self, h: ObjectHandle) -> bool;
}

impl HandleTable for Registry {
    fn is_live(&self, h: ObjectHandle) -> bool {
        Registry::is_live(self, h)
    }
}

#[derive(Debug, Clone)]
pub struct XlateConfig {
    tuple: Sym,
    map: Sym,
    set: Sym,
    objref: Sym,
    /// Reject repeated map keys instead of letting the last one win.
    pub strict_keys: bool,
    pub depth_limit: usize,
}

impl Default for XlateConfig {
    fn default() -> Self {
        XlateConfig {
            tuple: atoms::empty(),
            map: Sym::intern("pyDict"),
            set: Sym::intern("pySet"),
            objref: Sym::intern("pyObj"),
            strict_keys: false,
            depth_limit: 100_000,
        }
    }
}

impl XlateConfig {
    /// Custom functors; they must be pairwise distinct.
    pub fn with_functors(tuple: &str, map: &str, set: &str, objref: &str) -> Result<XlateConfig, XlateError> {
        let names = [tuple, map, set, objref];
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                if names[i] == names[j] {
                    return Err(XlateError::Domain(format!("functor '{}' used twice", names[i])));
                }
            }
        }
        Ok(XlateConfig {
            tuple: Sym::intern(tuple),
            map: Sym::intern(map),
            set: Sym::intern(set),
            objref: Sym::intern(objref),
            ..XlateConfig::default()
        })
    }

    pub fn tuple_functor(&self) -> Sym {
        self.tuple
    }

    pub fn map_functor(&self) -> Sym {
        self.map
    }

    pub fn set_functor(&self) -> Sym {
        self.set
    }

    pub fn objref_functor(&self) -> Sym {
        self.objref
    }
}

/// A translator that counts visited nodes.
pub struct Translator<'a> {
    cfg: &'a XlateConfig,
    handles: &'a dyn HandleTable,
    visits: usize,
}

enum TermFrame<'a> {
    List {
        rest: &'a Term,
        items: Vec<HostValue>,
        depth: usize,
    },
    Tuple {
        args: &'a [Term],
        next: usize,
        items: Vec<HostValue>,
        depth: usize,
    },
    Dict {
        rest: &'a Term,
        map: IndexMap<HashKey, HostValue>,
        key: Option<HostValue>,
        value_term: Option<&'a Term>,
        depth: usize,
    },
    Set {
        rest: &'a Term,
        set: IndexSet<HashKey>,
        depth: usize,
    },
}

enum Opened<'a> {
    Leaf(HostValue),
    Frame(TermFrame<'a>),
}

impl<'a> TermFrame<'a> {
    fn depth(&self) -> usize {
        match self {
            TermFrame::List { depth, .. }
            | TermFrame::Tuple { depth, .. }
            | TermFrame::Dict { depth, .. }
            | TermFrame::Set { depth, .. } => *depth,
        }
    }

    fn accept(&mut self, v: HostValue, strict: bool) -> Result<(), XlateError> {
        match self {
            TermFrame::List { items, .. } | TermFrame::Tuple { items, .. } => items.push(v),
            TermFrame::Dict { map, key, .. } => match key.take() {
                None => *key = Some(v),
                Some(k) => {
                    let k = HashKey::new(k).map_err(|e| XlateError::Domain(format!("pyDict key: {e}")))?;
                    if strict && map.contains_key(&k) {
                        return Err(XlateError::Domain(format!("duplicate pyDict key {:?}", k.value())));
                    }
                    map.insert(k, v);
                }
            },
            TermFrame::Set { set, .. } => {
                let k = HashKey::new(v).map_err(|e| XlateError::Domain(format!("pySet element: {e}")))?;
                set.insert(k);
            }
        }
        Ok(())
    }

    /// Next child to translate, or `None` when the frame is complete.
    fn next_child(&mut self, tuple_functor: Sym) -> Result<Option<&'a Term>, XlateError> {
        match self {
            TermFrame::List { rest, .. } | TermFrame::Set { rest, .. } => {
                if rest.is_nil() {
                    return Ok(None);
                }
                match rest.as_cons() {
                    Some((h, t)) => {
                        *rest = t;
                        Ok(Some(h))
                    }
                    None => Err(XlateError::Domain("improper list".into())),
                }
            }
            TermFrame::Tuple { args, next, .. } => {
                let child = args.get(*next);
                *next += 1;
                Ok(child)
            }
            TermFrame::Dict { rest, value_term, .. } => {
                if let Some(v) = value_term.take() {
                    return Ok(Some(v));
                }
                if rest.is_nil() {
                    return Ok(None);
                }
                let Some((entry, tail)) = rest.as_cons() else {
                    return Err(XlateError::Domain("pyDict argument is not a proper list".into()));
                };
                *rest = tail;
                match entry {
                    Term::Compound(c) if c.functor() == tuple_functor && c.arity() == 2 => {
                        *value_term = Some(&c.args()[1]);
                        Ok(Some(&c.args()[0]))
                    }
                    Term::Var(_) => Err(XlateError::Instantiation),
                    other => Err(XlateError::Domain(format!(
                        "pyDict entry {other} is not a key-value pair"
                    ))),
                }
            }
        }
    }

    fn finish(self) -> HostValue {
        match self {
            TermFrame::List { items, .. } => HostValue::Sequence(items),
            TermFrame::Tuple { items, .. } => HostValue::Tuple(items),
            TermFrame::Dict { map, .. } => HostValue::Map(map),
            TermFrame::Set { set, .. } => HostValue::Set(set),
        }
    }
}

enum ValueFrame<'v> {
    Seq {
        items: std::slice::Iter<'v, HostValue>,
        out: Vec<Term>,
        tuple: bool,
    },
    Map {
        entries: indexmap::map::Iter<'v, HashKey, HostValue>,
        pending_value: Option<&'v HostValue>,
        key: Option<Term>,
        out: Vec<Term>,
    },
    Set {
        items: indexmap::set::Iter<'v, HashKey>,
        out: Vec<Term>,
    },
}

impl<'v> ValueFrame<'v> {
    fn next_child(&mut self) -> Option<&'v HostValue> {
        match self {
            ValueFrame::Seq { items, .. } => items.next(),
            ValueFrame::Set { items, .. } => items.next().map(HashKey::value),
            ValueFrame::Map {
                entries, pending_value, ..
            } => {
                if let Some(v) = pending_value.take() {
                    return Some(v);
                }
                let (k, v) = entries.next()?;
                *pending_value = Some(v);
                Some(k.value())
            }
        }
    }

    fn accept(&mut self, t: Term, tuple_functor: Sym) {
        match self {
            ValueFrame::Seq { out, .. } | ValueFrame::Set { out, .. } => out.push(t),
            ValueFrame::Map { key, out, .. } => match key.take() {
                None => *key = Some(t),
                Some(k) => out.push(Term::compound(tuple_functor, vec![k, t])),
            },
        }
    }

    fn finish(self, cfg: &XlateConfig) -> Term {
        match self {
            ValueFrame::Seq { out, tuple: false, .. } => Term::list(out),
            ValueFrame::Seq { out, tuple: true, .. } => Term::compound(cfg.tuple, out),
            ValueFrame::Map { out, .. } => Term::compound(cfg.map, vec![Term::list(out)]),
            ValueFrame::Set { mut out, .. } => {
                out.sort_by(compare_terms);
                Term::compound(cfg.set, vec![Term::list(out)])
            }
        }
    }
}

impl<'a> Translator<'a> {
    pub fn new(cfg: &'a XlateConfig, handles: &'a dyn HandleTable) -> Translator<'a> {
        Translator {
            cfg,
            handles,
            visits: 0,
        }
    }

    /// Nodes visited since construction.
    pub fn visits(&self) -> usize {
        self.visits
    }

    fn open<'t>(&mut self, t: &'t Term, depth: usize) -> Result<Opened<'t>, XlateError> {
        self.visits += 1;
        if depth > self.cfg.depth_limit {
            return Err(XlateError::DepthLimit(self.cfg.depth_limit));
        }
        // Checks run in expected-frequency order: numbers, atoms, lists,
        // then the tuple, map and set functors.
        Ok(match t {
            Term::Int(i) => Opened::Leaf(HostValue::Int(*i)),
            Term::Atom(s) => {
                if *s == atoms::nil() {
                    Opened::Leaf(HostValue::Sequence(Vec::new()))
                } else if s.as_str() == NONE_ATOM {
                    Opened::Leaf(HostValue::Null)
                } else {
                    Opened::Leaf(HostValue::Text(s.as_str().to_string()))
                }
            }
            Term::Float(f) => Opened::Leaf(HostValue::Float(*f)),
            Term::Var(_) => return Err(XlateError::Instantiation),
            Term::Compound(c) => {
                let f = c.functor();
                if t.as_cons().is_some() {
                    Opened::Frame(TermFrame::List {
                        rest: t,
                        items: Vec::new(),
                        depth,
                    })
                } else if f == self.cfg.tuple {
                    Opened::Frame(TermFrame::Tuple {
                        args: c.args(),
                        next: 0,
                        items: Vec::with_capacity(c.arity()),
                        depth,
                    })
                } else if f == self.cfg.map && c.arity() == 1 {
                    Opened::Frame(TermFrame::Dict {
                        rest: &c.args()[0],
                        map: IndexMap::new(),
                        key: None,
                        value_term: None,
                        depth,
                    })
                } else if f == self.cfg.set && c.arity() == 1 {
                    Opened::Frame(TermFrame::Set {
                        rest: &c.args()[0],
                        set: IndexSet::new(),
                        depth,
                    })
                } else if f == self.cfg.objref && c.arity() == 1 {
                    let handle = match &c.args()[0] {
                        Term::Atom(s) => ObjectHandle::parse(s.as_str())
                            .ok_or_else(|| XlateError::Domain(format!("malformed object handle {}", s)))?,
                        Term::Var(_) => return Err(XlateError::Instantiation),
                        other => return Err(XlateError::Domain(format!("malformed object handle {other}"))),
                    };
                    if !self.handles.is_live(handle) {
                        return Err(XlateError::DanglingHandle(handle.to_string()));
                    }
                    Opened::Leaf(HostValue::ObjRef(handle))
                } else {
                    return Err(XlateError::Domain(format!(
                        "cannot translate term with functor {}/{}",
                        crate::term::write_atom(f.as_str()),
                        c.arity()
                    )));
                }
            }
        })
    }

    pub fn term_to_value(&mut self, root: &Term) -> Result<HostValue, XlateError> {
        let strict = self.cfg.strict_keys;
        let tuple = self.cfg.tuple;
        let mut stack: Vec<TermFrame<'_>> = Vec::new();
        let mut next: Option<(&Term, usize)> = Some((root, 1));
        let mut carry: Option<HostValue> = None;
        loop {
            if let Some((t, depth)) = next.take() {
                match self.open(t, depth)? {
                    Opened::Leaf(v) => carry = Some(v),
                    Opened::Frame(f) => stack.push(f),
                }
            }
            let Some(top) = stack.last_mut() else {
                return Ok(carry.expect("root produced a value"));
            };
            if let Some(v) = carry.take() {
                top.accept(v, strict)?;
            }
            match top.next_child(tuple)? {
                Some(child) => next = Some((child, top.depth() + 1)),
                None => carry = Some(stack.pop().expect("non-empty").finish()),
            }
        }
    }

    pub fn value_to_term(&mut self, root: &HostValue) -> Result<Term, XlateError> {
        let cfg = self.cfg;
        let mut stack: Vec<ValueFrame<'_>> = Vec::new();
        let mut next: Option<&HostValue> = Some(root);
        let mut carry: Option<Term> = None;
        loop {
            if let Some(v) = next.take() {
                self.visits += 1;
                if stack.len() + 1 > cfg.depth_limit {
                    return Err(XlateError::DepthLimit(cfg.depth_limit));
                }
                match v {
                    HostValue::Null => carry = Some(Term::atom(NONE_ATOM)),
                    HostValue::Int(i) => carry = Some(Term::Int(*i)),
                    HostValue::Float(f) => carry = Some(Term::Float(*f)),
                    HostValue::Text(s) => carry = Some(Term::Atom(Sym::intern(s))),
                    HostValue::ObjRef(h) => carry = Some(Term::compound(cfg.objref, vec![Term::atom(&h.to_string())])),
                    HostValue::Sequence(items) => stack.push(ValueFrame::Seq {
                        items: items.iter(),
                        out: Vec::with_capacity(items.len()),
                        tuple: false,
                    }),
                    HostValue::Tuple(items) => {
                        if items.is_empty() {
                            return Err(XlateError::Domain("empty tuple has no term image".into()));
                        }
                        if items.len() > MAX_TUPLE_ARITY {
                            return Err(XlateError::Limit(format!(
                                "tuple arity {} exceeds {}",
                                items.len(),
                                MAX_TUPLE_ARITY
                            )));
                        }
                        stack.push(ValueFrame::Seq {
                            items: items.iter(),
                            out: Vec::with_capacity(items.len()),
                            tuple: true,
                        })
                    }
                    HostValue::Map(map) => stack.push(ValueFrame::Map {
                        entries: map.iter(),
                        pending_value: None,
                        key: None,
                        out: Vec::with_capacity(map.len()),
                    }),
                    HostValue::Set(set) => stack.push(ValueFrame::Set {
                        items: set.iter(),
                        out: Vec::with_capacity(set.len()),
                    }),
                }
            }
            let Some(top) = stack.last_mut() else {
                return Ok(carry.expect("root produced a term"));
            };
            if let Some(t) = carry.take() {
                top.accept(t, cfg.tuple);
            }
            match top.next_child() {
                Some(child) => next = Some(child),
                None => carry = Some(stack.pop().expect("non-empty").finish(cfg)),
            }
        }
    }
}

pub fn term_to_value(t: &Term, cfg: &XlateConfig, handles: &dyn HandleTable) -> Result<HostValue, XlateError> {
    Translator::new(cfg, handles).term_to_value(t)
}

pub fn value_to_term(v: &HostValue, cfg: &XlateConfig, handles: &dyn HandleTable) -> Result<Term, XlateError> {
    Translator::new(cfg, handles).value_to_term(v)
}

/// Canonical form of a translatable term: `pySet` elements sorted and
/// de-duplicated, `pyDict` entries reduced to the last value per key at the
/// key's first position.
pub fn normalize(t: &Term, cfg: &XlateConfig) -> Term {
    match t {
        Term::Compound(c) => {
            if t.as_cons().is_some() {
                let mut items = Vec::new();
                let mut cur = t;
                while let Some((h, tail)) = cur.as_cons() {
                    items.push(normalize(h, cfg));
                    cur = tail;
                }
                return Term::list_with_tail(items, cur.clone());
            }
            if c.functor() == cfg.set && c.arity() == 1 {
                if let Some(items) = c.args()[0].list_items() {
                    let mut items: Vec<Term> = items.iter().map(|i| normalize(i, cfg)).collect();
                    items.sort_by(compare_terms);
                    items.dedup_by(|a, b| compare_terms(a, b) == Ordering::Equal);
                    return Term::compound(cfg.set, vec![Term::list(items)]);
                }
            }
            if c.functor() == cfg.map && c.arity() == 1 {
                if let Some(entries) = c.args()[0].list_items() {
                    let mut merged: IndexMap<Term, Term> = IndexMap::new();
                    for e in &entries {
                        match e.as_compound() {
                            Some(p) if p.functor() == cfg.tuple && p.arity() == 2 => {
                                merged.insert(normalize(&p.args()[0], cfg), normalize(&p.args()[1], cfg));
                            }
                            _ => return t.clone(),
                        }
                    }
                    let pairs = merged
                        .into_iter()
                        .map(|(k, v)| Term::compound(cfg.tuple, vec![k, v]))
                        .collect::<Vec<_>>();
                    return Term::compound(cfg.map, vec![Term::list(pairs)]);
                }
            }
            Term::compound(c.functor(), c.args().iter().map(|a| normalize(a, cfg)).collect())
        }
        _ => t.clone(),
    }
}

/// Translates to a host value and back, reporting whether the result equals
/// the input, or failing that its normal form.
pub fn roundtrip_check(t: &Term, cfg: &XlateConfig, handles: &dyn HandleTable) -> Result<bool, XlateError> {
    let v = term_to_value(t, cfg, handles)?;
    let back = value_to_term(&v, cfg, handles)?;
    if back == *t {
        return Ok(true);
    }
    Ok(back == normalize(t, cfg))
}
