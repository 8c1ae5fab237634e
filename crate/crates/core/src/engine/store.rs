use std::collections::HashMap;

use crate::term::{Term, Var};

/// What [`rebuild`] does with a visited node.
pub(crate) enum Leaf {
    /// Keep atomic terms; descend into compounds.
    Keep,
    /// Use this term in place of the node.
    Replace(Term),
    /// Visit this term in place of the node.
    Expand(Term),
}

/// Rebuilds a term bottom-up without recursion. Compounds whose arguments
/// come back unchanged are shared, not copied.
pub(crate) fn rebuild(root: &Term, f: &mut dyn FnMut(&Term) -> Leaf) -> Term {
    enum Task {
        Visit(Term),
        Build(Term),
        MarkChanged,
    }
    let mut tasks = vec![Task::Visit(root.clone())];
    let mut out: Vec<(Term, bool)> = Vec::new();
    while let Some(task) = tasks.pop() {
        match task {
            Task::Visit(t) => match f(&t) {
                Leaf::Keep => match &t {
                    Term::Compound(c) => {
                        tasks.push(Task::Build(t.clone()));
                        for a in c.args().iter().rev() {
                            tasks.push(Task::Visit(a.clone()));
                        }
                    }
                    _ => out.push((t, false)),
                },
                Leaf::Replace(x) => out.push((x, true)),
                Leaf::Expand(x) => {
                    tasks.push(Task::MarkChanged);
                    tasks.push(Task::Visit(x));
                }
            },
            Task::Build(orig) => {
                let Term::Compound(c) = &orig else {
                    unreachable!("only compounds are built")
                };
                let n = c.arity();
                let args = out.split_off(out.len() - n);
                if args.iter().any(|(_, changed)| *changed) {
                    let args = args.into_iter().map(|(t, _)| t).collect();
                    out.push((Term::compound(c.functor(), args), true));
                } else {
                    out.push((orig, false));
                }
            }
            Task::MarkChanged => out.last_mut().expect("expanded value").1 = true,
        }
    }
    out.pop().expect("root value").0
}

/// Renumbers variables by first occurrence from 0. Two terms are variants
/// exactly when their keys are equal.
pub(crate) fn variant_key(t: &Term) -> (Term, u32) {
    let mut map: HashMap<u32, u32> = HashMap::new();
    let key = rebuild(t, &mut |n| match n {
        Term::Var(v) => {
            let next = map.len() as u32;
            let id = *map.entry(v.id).or_insert(next);
            Leaf::Replace(Term::Var(Var::new(id)))
        }
        _ => Leaf::Keep,
    });
    (key, map.len() as u32)
}

pub(crate) fn max_var_id(t: &Term) -> Option<u32> {
    let mut max = None;
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        match t {
            Term::Var(v) => max = max.max(Some(v.id)),
            Term::Compound(c) => stack.extend(c.args()),
            _ => {}
        }
    }
    max
}

/// Variable bindings with a trail for undoing them on backtracking.
#[derive(Debug, Default)]
pub struct Store {
    vals: Vec<Option<Term>>,
    trail: Vec<u32>,
    occurs_check: bool,
    scratch: Vec<(Term, Term)>,
}

/// A point to undo back to.
#[derive(Debug, Clone, Copy)]
pub struct Mark {
    trail: usize,
    vars: usize,
}

impl Store {
    pub fn new(vars: u32, occurs_check: bool) -> Store {
        Store {
            vals: vec![None; vars as usize],
            trail: Vec::new(),
            occurs_check,
            scratch: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Allocates `n` fresh variables and returns the first id.
    pub fn alloc(&mut self, n: u32) -> u32 {
        let base = self.vals.len() as u32;
        self.vals.resize(self.vals.len() + n as usize, None);
        base
    }

    pub fn fresh(&mut self) -> Term {
        Term::Var(Var::new(self.alloc(1)))
    }

    pub fn mark(&self) -> Mark {
        Mark {
            trail: self.trail.len(),
            vars: self.vals.len(),
        }
    }

    pub fn undo(&mut self, m: Mark) {
        for id in self.trail.drain(m.trail..) {
            if let Some(slot) = self.vals.get_mut(id as usize) {
                *slot = None;
            }
        }
        self.vals.truncate(m.vars);
    }

    fn binding(&self, v: &Var) -> Option<&Term> {
        self.vals.get(v.id as usize).and_then(Option::as_ref)
    }

    pub fn deref(&self, t: &Term) -> Term {
        let mut cur = t;
        while let Term::Var(v) = cur {
            match self.binding(v) {
                Some(next) => cur = next,
                None => break,
            }
        }
        cur.clone()
    }

    /// The term with all bound variables substituted.
    pub fn resolve(&self, t: &Term) -> Term {
        if !matches!(t, Term::Var(_) | Term::Compound(_)) {
            return t.clone();
        }
        rebuild(t, &mut |n| match n {
            Term::Var(v) => match self.binding(v) {
                Some(b) => Leaf::Expand(b.clone()),
                None => Leaf::Keep,
            },
            _ => Leaf::Keep,
        })
    }

    fn occurs(&self, id: u32, t: &Term) -> bool {
        let mut stack = vec![t.clone()];
        while let Some(t) = stack.pop() {
            match self.deref(&t) {
                Term::Var(v) if v.id == id => return true,
                Term::Compound(c) => stack.extend(c.args().iter().cloned()),
                _ => {}
            }
        }
        false
    }

    fn bind(&mut self, v: &Var, t: Term) -> bool {
        if self.occurs_check && self.occurs(v.id, &t) {
            return false;
        }
        let idx = v.id as usize;
        if idx >= self.vals.len() {
            self.vals.resize(idx + 1, None);
        }
        self.vals[idx] = Some(t);
        self.trail.push(v.id);
        true
    }

    /// Unifies two terms. On failure some bindings may remain; callers undo
    /// to a mark taken beforehand.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let mut stack = std::mem::take(&mut self.scratch);
        stack.clear();
        stack.push((a.clone(), b.clone()));
        let ok = self.unify_with(&mut stack);
        stack.clear();
        self.scratch = stack;
        ok
    }

    fn unify_with(&mut self, stack: &mut Vec<(Term, Term)>) -> bool {
        while let Some((x, y)) = stack.pop() {
            let x = self.deref(&x);
            let y = self.deref(&y);
            match (&x, &y) {
                (Term::Var(v), Term::Var(w)) => {
                    if v.id == w.id {
                        continue;
                    }
                    // Newer variables point at older ones.
                    let ok = if v.id > w.id {
                        self.bind(v, y.clone())
                    } else {
                        self.bind(w, x.clone())
                    };
                    if !ok {
                        return false;
                    }
                }
                (Term::Var(v), _) => {
                    if !self.bind(v, y.clone()) {
                        return false;
                    }
                }
                (_, Term::Var(w)) => {
                    if !self.bind(w, x.clone()) {
                        return false;
                    }
                }
                (Term::Compound(c), Term::Compound(d)) => {
                    if std::sync::Arc::ptr_eq(c, d) {
                        continue;
                    }
                    if c.functor() != d.functor() || c.arity() != d.arity() {
                        return false;
                    }
                    for (p, q) in c.args().iter().zip(d.args()).rev() {
                        stack.push((p.clone(), q.clone()));
                    }
                }
                _ => {
                    if x != y {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Unifies `goal` with a clause term whose variables are shifted by
    /// `base`, without first building the shifted copy.
    pub(crate) fn unify_head(&mut self, goal: &Term, head: &Term, base: u32) -> bool {
        self.unify_head_at(goal, head, base, 0)
    }

    fn unify_head_at(&mut self, goal: &Term, head: &Term, base: u32, depth: usize) -> bool {
        match head {
            Term::Var(v) => self.unify(goal, &Term::Var(Var::new(v.id + base))),
            Term::Compound(hc) => {
                if depth >= RECURSION_CUTOFF {
                    return self.unify(goal, &rename(head, base));
                }
                match self.deref(goal) {
                    Term::Var(gv) => self.bind(&gv, rename(head, base)),
                    Term::Compound(gc) => {
                        gc.functor() == hc.functor()
                            && gc.arity() == hc.arity()
                            && gc
                                .args()
                                .iter()
                                .zip(hc.args())
                                .all(|(g, h)| self.unify_head_at(g, h, base, depth + 1))
                    }
                    _ => false,
                }
            }
            _ => match self.deref(goal) {
                Term::Var(gv) => self.bind(&gv, head.clone()),
                other => other == *head,
            },
        }
    }

    /// Unifies and undoes partial bindings on failure.
    pub fn unify_or_undo(&mut self, a: &Term, b: &Term) -> bool {
        let m = self.mark();
        let ok = self.unify(a, b);
        if !ok {
            self.undo(m);
        }
        ok
    }

    /// Copies a term as is, replacing its variables by fresh ones.
    pub fn fresh_copy(&mut self, t: &Term) -> Term {
        let mut map: HashMap<u32, Term> = HashMap::new();
        rebuild(t, &mut |n| match n {
            Term::Var(v) => {
                let fresh = match map.get(&v.id) {
                    Some(f) => f.clone(),
                    None => {
                        let f = self.fresh();
                        map.insert(v.id, f.clone());
                        f
                    }
                };
                Leaf::Replace(fresh)
            }
            _ => Leaf::Keep,
        })
    }
}

/// Nesting depth past which term walks switch from recursion to an
/// explicit stack.
const RECURSION_CUTOFF: usize = 64;

/// Shifts every variable id in a clause term by `base`. Subterms without
/// variables are shared.
pub(crate) fn rename(t: &Term, base: u32) -> Term {
    rename_at(t, base, 0).unwrap_or_else(|| t.clone())
}

fn rename_at(t: &Term, base: u32, depth: usize) -> Option<Term> {
    match t {
        Term::Var(v) => Some(Term::Var(Var::new(v.id + base))),
        Term::Compound(c) => {
            if depth >= RECURSION_CUTOFF {
                let r = rebuild(t, &mut |n| match n {
                    Term::Var(v) => Leaf::Replace(Term::Var(Var::new(v.id + base))),
                    _ => Leaf::Keep,
                });
                return Some(r);
            }
            let args = c.args();
            let (first, renamed) = args
                .iter()
                .enumerate()
                .find_map(|(i, a)| rename_at(a, base, depth + 1).map(|r| (i, r)))?;
            let mut out = Vec::with_capacity(args.len());
            out.extend_from_slice(&args[..first]);
            out.push(renamed);
            for a in &args[first + 1..] {
                out.push(rename_at(a, base, depth + 1).unwrap_or_else(|| a.clone()));
            }
            Some(Term::compound(c.functor(), out))
        }
        _ => None,
    }
}
