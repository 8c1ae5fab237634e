use std::cell::Cell;
use std::rc::Rc;

use super::arith::{compare_num, eval};
use super::store::{rename, variant_key, Mark, Store};
use super::tabling::{self, Grounding, TableAnswer};
use super::{charge, charge_size, is_foreign, ArgKey, Engine, Foreign, Pred, Truth};
use crate::error::{BridgeError, ErrorKind, Result};
use crate::term::{atoms, write_atom, Sym, Term};

/// Persistent singly linked list.
pub(crate) struct Cons<T> {
    head: T,
    tail: PList<T>,
}

pub(crate) type PList<T> = Option<Rc<Cons<T>>>;

impl<T> Drop for Cons<T> {
    fn drop(&mut self) {
        let mut next = self.tail.take();
        while let Some(rc) = next {
            match Rc::try_unwrap(rc) {
                Ok(mut node) => next = node.tail.take(),
                Err(_) => break,
            }
        }
    }
}

fn cons<T>(head: T, tail: PList<T>) -> PList<T> {
    Some(Rc::new(Cons { head, tail }))
}

#[derive(Clone)]
struct Goal<'a> {
    term: Term,
    module: Sym,
    frame: PList<&'a Pred>,
    /// Resolve against the predicate's clauses even if it is tabled.
    direct: bool,
}

pub(crate) enum Lit {
    Delay(Term),
    Pos(usize),
    Neg(usize),
}

enum Alt<'a> {
    Goals(PList<Goal<'a>>),
    Clauses {
        goal: Term,
        frame: PList<&'a Pred>,
        pred: &'a Pred,
        key: ArgKey,
        next: usize,
        cont: PList<Goal<'a>>,
    },
    Answers {
        goal: Term,
        answers: Rc<Vec<TableAnswer>>,
        next: usize,
        cont: PList<Goal<'a>>,
    },
    CallAnswers {
        goal: Term,
        call: usize,
        next: usize,
        cont: PList<Goal<'a>>,
    },
}

struct ChoicePoint<'a> {
    alt: Alt<'a>,
    mark: Mark,
    lits: PList<Lit>,
}

pub(crate) enum StepsRef<'a> {
    Owned(Box<Cell<u64>>),
    Borrowed(&'a Cell<u64>),
}

fn cell<'s>(s: &'s StepsRef<'_>) -> &'s Cell<u64> {
    match s {
        StepsRef::Owned(b) => b,
        StepsRef::Borrowed(c) => c,
    }
}

pub(crate) enum Mode<'a> {
    Normal,
    /// Grounding for tabled evaluation: tabled calls become body literals.
    Table(&'a mut Grounding),
}

pub(crate) struct Machine<'a> {
    engine: &'a Engine,
    foreign: &'a mut dyn Foreign,
    steps: StepsRef<'a>,
    mode: Mode<'a>,
    store: Store,
    goals: PList<Goal<'a>>,
    lits: PList<Lit>,
    choices: Vec<ChoicePoint<'a>>,
    started: bool,
}

fn instantiation(what: &str) -> BridgeError {
    BridgeError::logic(
        ErrorKind::InstantiationError,
        format!("{what} is not sufficiently instantiated"),
    )
}

fn not_callable(t: &Term) -> BridgeError {
    BridgeError::logic(ErrorKind::TypeError, format!("{} is not callable", short(t)))
}

fn short(t: &Term) -> String {
    let s = t.to_string();
    if s.chars().count() > 200 {
        let cut: String = s.chars().take(200).collect();
        format!("{cut}...")
    } else {
        s
    }
}

fn add_args(goal: &Term, extra: &[Term]) -> Result<Term> {
    match goal {
        Term::Atom(s) => {
            if extra.is_empty() {
                Ok(goal.clone())
            } else {
                Ok(Term::compound(*s, extra.to_vec()))
            }
        }
        Term::Compound(c) => {
            let mut args = c.args().to_vec();
            args.extend_from_slice(extra);
            Term::try_compound(c.functor(), args)
                .ok_or_else(|| BridgeError::logic(ErrorKind::LimitError, "call/N exceeds maximum arity"))
        }
        Term::Var(_) => Err(instantiation("call/N goal")),
        _ => Err(not_callable(goal)),
    }
}

impl<'a> Machine<'a> {
    pub(crate) fn new(
        engine: &'a Engine,
        foreign: &'a mut dyn Foreign,
        steps: StepsRef<'a>,
        mode: Mode<'a>,
        vars: u32,
    ) -> Machine<'a> {
        Machine {
            engine,
            foreign,
            steps,
            mode,
            store: Store::new(vars, engine.config.occurs_check),
            goals: None,
            lits: None,
            choices: Vec::new(),
            started: false,
        }
    }

    pub(crate) fn push_goal(&mut self, term: Term, module: Sym) {
        self.push_goal_direct(term, module, false);
    }

    pub(crate) fn push_goal_direct(&mut self, term: Term, module: Sym, direct: bool) {
        let goal = Goal {
            term,
            module,
            frame: None,
            direct,
        };
        self.goals = cons(goal, self.goals.take());
    }

    pub(crate) fn resolve(&self, t: &Term) -> Term {
        self.store.resolve(t)
    }

    /// Delayed literals of the current solution, oldest first, without
    /// repeats.
    pub(crate) fn delays(&self) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        let mut cur = &self.lits;
        while let Some(node) = cur {
            if let Lit::Delay(t) = &node.head {
                let t = self.store.resolve(t);
                if !out.contains(&t) {
                    out.push(t);
                }
            }
            cur = &node.tail;
        }
        out.reverse();
        out
    }

    /// Positive and negative atom literals of the current solution.
    pub(crate) fn table_lits(&self) -> (Vec<usize>, Vec<usize>) {
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        let mut cur = &self.lits;
        while let Some(node) = cur {
            match node.head {
                Lit::Pos(a) => pos.push(a),
                Lit::Neg(a) => neg.push(a),
                Lit::Delay(_) => {}
            }
            cur = &node.tail;
        }
        pos.reverse();
        neg.reverse();
        (pos, neg)
    }

    pub(crate) fn grounding(&mut self) -> &mut Grounding {
        match &mut self.mode {
            Mode::Table(g) => g,
            Mode::Normal => unreachable!("grounding requested in normal mode"),
        }
    }

    pub(crate) fn next_solution(&mut self) -> Result<bool> {
        if self.started && !self.backtrack()? {
            return Ok(false);
        }
        self.started = true;
        loop {
            let Some(node) = self.goals.take() else {
                return Ok(true);
            };
            self.goals = node.tail.clone();
            charge(cell(&self.steps), 1)?;
            match self.step(&node.head) {
                Ok(true) => {}
                Ok(false) => {
                    if !self.backtrack()? {
                        return Ok(false);
                    }
                }
                Err(mut e) => {
                    if e.logic_backtrace.is_empty() {
                        e.logic_backtrace = self.backtrace(&node.head);
                    }
                    return Err(e);
                }
            }
        }
    }

    fn backtrace(&self, g: &Goal<'a>) -> Vec<String> {
        let mut out = vec![format!("goal {}", short(&self.store.resolve(&g.term)))];
        let mut cur = &g.frame;
        while let Some(node) = cur {
            if out.len() > 20 {
                out.push("...".into());
                break;
            }
            out.push(node.head.indicator());
            cur = &node.tail;
        }
        out
    }

    fn backtrack(&mut self) -> Result<bool> {
        while let Some(cp) = self.choices.pop() {
            self.store.undo(cp.mark);
            self.lits = cp.lits;
            let ok = match cp.alt {
                Alt::Goals(g) => {
                    self.goals = g;
                    true
                }
                Alt::Clauses {
                    goal,
                    frame,
                    pred,
                    key,
                    next,
                    cont,
                } => self.try_clauses(goal, frame, pred, key, Some(next), cont)?,
                Alt::Answers {
                    goal,
                    answers,
                    next,
                    cont,
                } => self.try_answers(goal, answers, next, cont),
                Alt::CallAnswers { goal, call, next, cont } => self.try_call_answers(goal, call, next, cont),
            };
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn push_choice(&mut self, alt: Alt<'a>, mark: Mark, lits: PList<Lit>) {
        self.choices.push(ChoicePoint { alt, mark, lits });
    }

    fn try_clauses(
        &mut self,
        goal: Term,
        frame: PList<&'a Pred>,
        pred: &'a Pred,
        key: ArgKey,
        mut idx: Option<usize>,
        cont: PList<Goal<'a>>,
    ) -> Result<bool> {
        while let Some(i) = idx {
            let next = pred.next_candidate(key, i + 1);
            let mark = self.store.mark();
            let entry = &pred.clauses[i];
            let base = self.store.alloc(entry.clause.var_count);
            if self.store.unify_head(&goal, &entry.clause.head, base) {
                let body_frame = cons(pred, frame.clone());
                let mut goals = cont.clone();
                for b in entry.clause.body.iter().rev() {
                    let g = Goal {
                        term: rename(b, base),
                        module: pred.module,
                        frame: body_frame.clone(),
                        direct: false,
                    };
                    goals = cons(g, goals);
                }
                if let Some(n) = next {
                    let lits = self.lits.clone();
                    self.push_choice(
                        Alt::Clauses {
                            goal,
                            frame,
                            pred,
                            key,
                            next: n,
                            cont,
                        },
                        mark,
                        lits,
                    );
                }
                self.goals = goals;
                return Ok(true);
            }
            self.store.undo(mark);
            charge(cell(&self.steps), 1)?;
            idx = next;
        }
        Ok(false)
    }

    fn try_answers(&mut self, goal: Term, answers: Rc<Vec<TableAnswer>>, mut i: usize, cont: PList<Goal<'a>>) -> bool {
        while i < answers.len() {
            let mark = self.store.mark();
            if self.store.unify(&goal, &answers[i].term) {
                let lits = self.lits.clone();
                if answers[i].truth == Truth::Undefined {
                    self.lits = cons(Lit::Delay(answers[i].term.clone()), self.lits.take());
                }
                let more = i + 1 < answers.len();
                self.goals = cont.clone();
                if more {
                    self.push_choice(
                        Alt::Answers {
                            goal,
                            answers,
                            next: i + 1,
                            cont,
                        },
                        mark,
                        lits,
                    );
                }
                return true;
            }
            self.store.undo(mark);
            i += 1;
        }
        false
    }

    fn try_call_answers(&mut self, goal: Term, call: usize, mut i: usize, cont: PList<Goal<'a>>) -> bool {
        loop {
            let Some((atom, term)) = self.grounding().answer(call, i) else {
                return false;
            };
            let mark = self.store.mark();
            if self.store.unify(&goal, &term) {
                let lits = self.lits.clone();
                self.lits = cons(Lit::Pos(atom), self.lits.take());
                self.goals = cont.clone();
                self.push_choice(
                    Alt::CallAnswers {
                        goal,
                        call,
                        next: i + 1,
                        cont,
                    },
                    mark,
                    lits,
                );
                return true;
            }
            self.store.undo(mark);
            i += 1;
        }
    }

    fn step(&mut self, g: &Goal<'a>) -> Result<bool> {
        let cont = self.goals.take();
        let term = self.store.deref(&g.term);
        let (name, arity) = match &term {
            Term::Atom(s) => (*s, 0),
            Term::Compound(c) => (c.functor(), c.arity()),
            Term::Var(_) => return Err(instantiation("goal")),
            _ => return Err(not_callable(&term)),
        };
        if g.direct {
            let pred = self.lookup(g.module, name, arity)?;
            let key = term
                .args()
                .first()
                .map_or(ArgKey::Var, |a| ArgKey::of(&self.store.deref(a)));
            let first = pred.next_candidate(key, 0);
            return self.try_clauses(term, g.frame.clone(), pred, key, first, cont);
        }
        let args = term.args();
        let sub = |t: Term, g: &Goal<'a>| Goal {
            term: t,
            module: g.module,
            frame: g.frame.clone(),
            direct: false,
        };
        // Names outside the builtin set skip the string match entirely.
        let text = if self.engine.is_builtin(name) {
            name.as_str()
        } else {
            ""
        };
        match (text, arity) {
            ("true", 0) => {
                self.goals = cont;
                Ok(true)
            }
            ("fail" | "false", 0) => Ok(false),
            (",", 2) => {
                let rest = cons(sub(args[1].clone(), g), cont);
                self.goals = cons(sub(args[0].clone(), g), rest);
                Ok(true)
            }
            (";", 2) => {
                let mark = self.store.mark();
                let alt = cons(sub(args[1].clone(), g), cont.clone());
                let lits = self.lits.clone();
                self.push_choice(Alt::Goals(alt), mark, lits);
                self.goals = cons(sub(args[0].clone(), g), cont);
                Ok(true)
            }
            ("=", 2) => {
                self.goals = cont;
                Ok(self.store.unify(&args[0], &args[1]))
            }
            ("\\=", 2) => {
                let mark = self.store.mark();
                let unifies = self.store.unify(&args[0], &args[1]);
                self.store.undo(mark);
                self.goals = cont;
                Ok(!unifies)
            }
            ("==" | "\\==", 2) => {
                let same = self.store.resolve(&args[0]) == self.store.resolve(&args[1]);
                self.goals = cont;
                Ok(same == (name.as_str() == "=="))
            }
            ("is", 2) => {
                let v = eval(&args[1], &self.store)?;
                self.goals = cont;
                Ok(self.store.unify(&args[0], &v.to_term()))
            }
            ("=:=" | "=\\=" | "<" | ">" | "=<" | ">=", 2) => {
                let a = eval(&args[0], &self.store)?;
                let b = eval(&args[1], &self.store)?;
                let ord = compare_num(a, b);
                use std::cmp::Ordering::*;
                let holds = match name.as_str() {
                    "=:=" => ord == Equal,
                    "=\\=" => ord != Equal,
                    "<" => ord == Less,
                    ">" => ord == Greater,
                    "=<" => ord != Greater,
                    _ => ord != Less,
                };
                self.goals = cont;
                Ok(holds)
            }
            ("findall", 3) => {
                let results = self.sub_solutions(&args[0], &args[1], g.module, None)?;
                self.goals = cont;
                Ok(self.store.unify(&args[2], &Term::list(results)))
            }
            ("\\+", 1) => {
                let found = self.sub_solutions(&Term::nil(), &args[0], g.module, Some(1))?;
                self.goals = cont;
                Ok(found.is_empty())
            }
            ("tnot", 1) => {
                let ok = self.tnot(&args[0], g.module)?;
                self.goals = cont;
                Ok(ok)
            }
            ("call", n) if n >= 1 => {
                let mut target = self.store.deref(&args[0]);
                let mut module = g.module;
                while let Term::Compound(c) = &target {
                    if c.functor() != atoms::colon() || c.arity() != 2 {
                        break;
                    }
                    module = self.module_of(&c.args()[0])?;
                    target = self.store.deref(&c.args()[1]);
                }
                let goal = add_args(&target, &args[1..])?;
                self.goals = cons(
                    Goal {
                        term: goal,
                        module,
                        frame: g.frame.clone(),
                        direct: false,
                    },
                    cont,
                );
                Ok(true)
            }
            (":", 2) => {
                let module = self.module_of(&args[0])?;
                self.goals = cons(
                    Goal {
                        term: args[1].clone(),
                        module,
                        frame: g.frame.clone(),
                        direct: false,
                    },
                    cont,
                );
                Ok(true)
            }
            (n, a) if is_foreign(n, a) => {
                let resolved = self.store.resolve(&term);
                let out = self.foreign.call(self.engine, g.module, &resolved)?;
                self.goals = cont;
                Ok(match out {
                    Some(t) => self.store.unify(&term, &t),
                    None => false,
                })
            }
            _ => {
                let pred = self.lookup(g.module, name, arity)?;
                if pred.tabled {
                    return self.tabled_call(term, pred, cont);
                }
                let key = args.first().map_or(ArgKey::Var, |a| ArgKey::of(&self.store.deref(a)));
                let first = pred.next_candidate(key, 0);
                self.try_clauses(term, g.frame.clone(), pred, key, first, cont)
            }
        }
    }

    fn lookup(&self, module: Sym, name: Sym, arity: usize) -> Result<&'a Pred> {
        self.engine.lookup(module, name, arity).ok_or_else(|| {
            BridgeError::logic(
                ErrorKind::ExistenceError,
                format!(
                    "unknown procedure {}:{}/{}",
                    write_atom(module.as_str()),
                    write_atom(name.as_str()),
                    arity
                ),
            )
        })
    }

    fn module_of(&self, t: &Term) -> Result<Sym> {
        match self.store.deref(t) {
            Term::Atom(m) => Ok(m),
            Term::Var(_) => Err(instantiation("module qualifier")),
            other => Err(BridgeError::logic(
                ErrorKind::TypeError,
                format!("module qualifier {} is not an atom", short(&other)),
            )),
        }
    }

    fn tabled_call(&mut self, term: Term, pred: &'a Pred, cont: PList<Goal<'a>>) -> Result<bool> {
        let resolved = self.store.resolve(&term);
        match &mut self.mode {
            Mode::Normal => {
                let answers = tabling::table_answers(
                    self.engine,
                    pred.module,
                    &resolved,
                    &mut *self.foreign,
                    cell(&self.steps),
                )?;
                Ok(self.try_answers(term, answers, 0, cont))
            }
            Mode::Table(gr) => {
                let (key, vars) = variant_key(&resolved);
                let call = gr.call_id(pred.module, key, vars, false);
                gr.consume(call);
                Ok(self.try_call_answers(term, call, 0, cont))
            }
        }
    }

    fn tnot(&mut self, arg: &Term, module: Sym) -> Result<bool> {
        let mut goal = self.store.resolve(arg);
        let mut module = module;
        while let Term::Compound(c) = &goal {
            if c.functor() != atoms::colon() || c.arity() != 2 {
                break;
            }
            module = self.module_of(&c.args()[0])?;
            goal = c.args()[1].clone();
        }
        if goal.is_var() {
            return Err(instantiation("tnot/1 argument"));
        }
        let Some((name, arity)) = goal.functor() else {
            return Err(not_callable(&goal));
        };
        if !goal.is_ground() {
            return Err(BridgeError::logic(
                ErrorKind::Floundering,
                format!("tnot/1 called with non-ground goal {}", short(&goal)),
            ));
        }
        let pred = self.lookup(module, name, arity)?;
        if !pred.tabled {
            return Err(BridgeError::logic(
                ErrorKind::PermissionError,
                format!("tnot/1 requires a tabled predicate, {} is not tabled", pred.indicator()),
            ));
        }
        match &mut self.mode {
            Mode::Normal => {
                let answers =
                    tabling::table_answers(self.engine, pred.module, &goal, &mut *self.foreign, cell(&self.steps))?;
                if answers.iter().any(|a| a.truth == Truth::True) {
                    return Ok(false);
                }
                if answers.iter().any(|a| a.truth == Truth::Undefined) {
                    let lit = Term::compound(atoms::tnot(), vec![goal]);
                    self.lits = cons(Lit::Delay(lit), self.lits.take());
                }
                Ok(true)
            }
            Mode::Table(gr) => {
                gr.call_id(pred.module, goal.clone(), 0, false);
                let atom = gr.atom_id(pred.module, goal, false);
                self.lits = cons(Lit::Neg(atom), self.lits.take());
                Ok(true)
            }
        }
    }

    /// Runs `goal` in a nested machine and returns fresh copies of
    /// `template` for its solutions.
    pub(crate) fn steps(&self) -> &Cell<u64> {
        cell(&self.steps)
    }

    fn sub_solutions(&mut self, template: &Term, goal: &Term, module: Sym, limit: Option<usize>) -> Result<Vec<Term>> {
        let pair = Term::compound(
            atoms::empty(),
            vec![self.store.resolve(template), self.store.resolve(goal)],
        );
        let (pair, vars) = variant_key(&pair);
        let mut found = Vec::new();
        {
            let steps = cell(&self.steps);
            let mut sub = Machine::new(
                self.engine,
                &mut *self.foreign,
                StepsRef::Borrowed(steps),
                Mode::Normal,
                vars,
            );
            sub.push_goal(pair.args()[1].clone(), module);
            while sub.next_solution()? {
                let t = sub.resolve(&pair.args()[0]);
                charge_size(steps, &t)?;
                found.push(t);
                if limit.is_some_and(|l| found.len() >= l) {
                    break;
                }
            }
        }
        Ok(found.iter().map(|t| self.store.fresh_copy(t)).collect())
    }
}
