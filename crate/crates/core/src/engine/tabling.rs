//! Tabled evaluation: relevant grounding followed by the well-founded
//! model of the ground rules.
//!
//! Each tabled call is evaluated against its clauses with tabled subgoals
//! recorded as body literals instead of being solved. Positive literals
//! take their instances from the answers found so far for the subgoal's
//! call; `tnot` literals must be ground and only register their call.
//! Rounds repeat until no consumed call gains an answer.

use std::cell::Cell;
use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use indexmap::IndexSet;

use super::machine::{Machine, Mode, StepsRef};
use super::store::variant_key;
use super::wfs::{well_founded, GroundRule, Model};
use super::{charge, Engine, Foreign, Truth};
use crate::error::{BridgeError, ErrorKind, Result};
use crate::term::{atoms, compare_terms, Sym, Term};

#[derive(Debug, Clone)]
pub(crate) struct TableAnswer {
    pub term: Term,
    pub truth: Truth,
    pub residual: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct AtomKey {
    module: Sym,
    term: Term,
    meta: bool,
}

struct CallEntry {
    module: Sym,
    goal: Term,
    vars: u32,
    meta: bool,
    answers: Vec<usize>,
    answer_set: HashSet<usize>,
    consumed: bool,
}

#[derive(Default)]
pub(crate) struct Grounding {
    atoms: IndexSet<AtomKey>,
    calls: Vec<CallEntry>,
    call_index: HashMap<(Sym, Term, bool), usize>,
    rules: IndexSet<GroundRule>,
    changed: bool,
}

impl Grounding {
    /// Id of the call whose goal is the variant key `goal`, registering it
    /// if new.
    pub(crate) fn call_id(&mut self, module: Sym, goal: Term, vars: u32, meta: bool) -> usize {
        if let Some(&id) = self.call_index.get(&(module, goal.clone(), meta)) {
            return id;
        }
        let id = self.calls.len();
        self.calls.push(CallEntry {
            module,
            goal: goal.clone(),
            vars,
            meta,
            answers: Vec::new(),
            answer_set: HashSet::new(),
            consumed: false,
        });
        self.call_index.insert((module, goal, meta), id);
        id
    }

    pub(crate) fn atom_id(&mut self, module: Sym, term: Term, meta: bool) -> usize {
        self.atoms.insert_full(AtomKey { module, term, meta }).0
    }

    pub(crate) fn consume(&mut self, call: usize) {
        self.calls[call].consumed = true;
    }

    /// The `i`th answer found so far for a call.
    pub(crate) fn answer(&self, call: usize, i: usize) -> Option<(usize, Term)> {
        let atom = *self.calls[call].answers.get(i)?;
        Some((atom, self.atoms[atom].term.clone()))
    }

    fn add_answer(&mut self, call: usize, atom: usize) {
        let c = &mut self.calls[call];
        if c.answer_set.insert(atom) {
            c.answers.push(atom);
            if c.consumed {
                self.changed = true;
            }
        }
    }

    fn atom_term(&self, atom: usize) -> &Term {
        &self.atoms[atom].term
    }
}

fn evaluate(
    engine: &Engine,
    gr: &mut Grounding,
    call: usize,
    foreign: &mut dyn Foreign,
    steps: &Cell<u64>,
) -> Result<()> {
    let (goal, module, vars, meta) = {
        let c = &gr.calls[call];
        (c.goal.clone(), c.module, c.vars, c.meta)
    };
    let mut m = Machine::new(engine, foreign, StepsRef::Borrowed(steps), Mode::Table(gr), vars);
    m.push_goal_direct(goal.clone(), module, !meta);
    while m.next_solution()? {
        let head = m.resolve(&goal);
        charge(steps, term_size(&head))?;
        if !head.is_ground() {
            return Err(BridgeError::logic(
                ErrorKind::InstantiationError,
                format!("tabled answer {head} is not ground"),
            ));
        }
        let (pos, neg) = m.table_lits();
        let gr = m.grounding();
        let atom = gr.atom_id(module, head, meta);
        gr.rules.insert(GroundRule { head: atom, pos, neg });
        gr.add_answer(call, atom);
    }
    Ok(())
}

fn term_size(t: &Term) -> u64 {
    let mut n = 0;
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        n += 1;
        if let Term::Compound(c) = t {
            stack.extend(c.args());
        }
    }
    n
}

fn saturate(engine: &Engine, gr: &mut Grounding, foreign: &mut dyn Foreign, steps: &Cell<u64>) -> Result<()> {
    loop {
        gr.changed = false;
        let mut i = 0;
        while i < gr.calls.len() {
            evaluate(engine, gr, i, foreign, steps)?;
            i += 1;
        }
        if !gr.changed {
            return Ok(());
        }
    }
}

struct Solved {
    gr: Grounding,
    rules: Vec<GroundRule>,
    by_head: Vec<Vec<usize>>,
    model: Model,
}

impl Solved {
    fn new(gr: Grounding, steps: &Cell<u64>) -> Result<Solved> {
        let rules: Vec<GroundRule> = gr.rules.iter().cloned().collect();
        let model = well_founded(gr.atoms.len(), &rules, steps)?;
        let mut by_head = vec![Vec::new(); gr.atoms.len()];
        for (i, r) in rules.iter().enumerate() {
            by_head[r.head].push(i);
        }
        Ok(Solved {
            gr,
            rules,
            by_head,
            model,
        })
    }

    /// Undefined body literals of the least surviving rule for `atom`.
    fn residual(&self, atom: usize) -> Vec<Term> {
        let undefined = |b: &usize| self.model.truth[*b] == Truth::Undefined;
        let mut best: Option<Term> = None;
        for &i in &self.by_head[atom] {
            let r = &self.rules[i];
            let survives = r.pos.iter().all(|&b| self.model.truth[b] != Truth::False)
                && r.neg.iter().all(|&b| self.model.truth[b] != Truth::True);
            if !survives {
                continue;
            }
            let mut lits: Vec<Term> = r
                .pos
                .iter()
                .filter(|b| undefined(b))
                .map(|&b| self.gr.atom_term(b).clone())
                .collect();
            for &b in r.neg.iter().filter(|b| undefined(b)) {
                lits.push(Term::compound(atoms::tnot(), vec![self.gr.atom_term(b).clone()]));
            }
            let candidate = Term::list(lits);
            if best.as_ref().is_none_or(|b| compare_terms(&candidate, b).is_lt()) {
                best = Some(candidate);
            }
        }
        best.and_then(|b| b.list_items()).unwrap_or_default()
    }

    fn answers(&self, call: usize) -> Vec<TableAnswer> {
        self.gr.calls[call]
            .answers
            .iter()
            .filter_map(|&a| {
                let truth = self.model.truth[a];
                match truth {
                    Truth::False => None,
                    Truth::True => Some(TableAnswer {
                        term: self.gr.atom_term(a).clone(),
                        truth,
                        residual: Vec::new(),
                    }),
                    Truth::Undefined => Some(TableAnswer {
                        term: self.gr.atom_term(a).clone(),
                        truth,
                        residual: self.residual(a),
                    }),
                }
            })
            .collect()
    }

    /// Caches every completed tabled call.
    fn complete(&self, engine: &Engine) {
        for (i, c) in self.gr.calls.iter().enumerate() {
            if !c.meta {
                engine.store_table((c.module, c.goal.clone()), Rc::new(self.answers(i)));
            }
        }
    }
}

/// Completed table for a call to a tabled predicate defined in `module`.
pub(crate) fn table_answers(
    engine: &Engine,
    module: Sym,
    goal: &Term,
    foreign: &mut dyn Foreign,
    steps: &Cell<u64>,
) -> Result<Rc<Vec<TableAnswer>>> {
    let (key, vars) = variant_key(goal);
    let table_key = (module, key.clone());
    if let Some(t) = engine.cached_table(&table_key) {
        return Ok(t);
    }
    let mut gr = Grounding::default();
    gr.call_id(module, key, vars, false);
    saturate(engine, &mut gr, foreign, steps)?;
    let solved = Solved::new(gr, steps)?;
    solved.complete(engine);
    Ok(engine.cached_table(&table_key).expect("root table completed"))
}

/// Well-founded answers for a goal of a plain predicate, through a
/// throwaway meta table.
pub(crate) fn meta_answers(
    engine: &Engine,
    module: Sym,
    goal: &Term,
    foreign: &mut dyn Foreign,
    steps: &Cell<u64>,
) -> Result<Vec<(Term, Truth, Vec<Term>)>> {
    let (key, vars) = variant_key(goal);
    let mut gr = Grounding::default();
    let root = gr.call_id(module, key, vars, true);
    saturate(engine, &mut gr, foreign, steps)?;
    let solved = Solved::new(gr, steps)?;
    solved.complete(engine);
    Ok(solved
        .answers(root)
        .into_iter()
        .map(|a| (a.term, a.truth, a.residual))
        .collect())
}
