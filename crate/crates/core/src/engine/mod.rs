//! Goal evaluation over consulted clauses.
//!
//! Plain predicates run by depth-first SLD resolution. Predicates declared
//! with `:- table p/n.` are evaluated by grounding the relevant part of the
//! program and computing its well-founded model, so their answers carry a
//! truth value and, when undefined, a residual of undefined literals.

mod arith;
mod machine;
pub mod store;
mod tabling;
pub mod wfs;

use rustc_hash::{FxHashMap, FxHashSet};
use std::cell::{Cell, RefCell};
use std::fmt;
use std::rc::Rc;

pub use arith::{eval, Num};
use machine::{Machine, Mode};
pub use store::Store;
use tabling::TableAnswer;

use crate::error::{BridgeError, ErrorKind, Result};
use crate::term::{atoms, read_clauses, write_atom, Clause, Sym, Term, Var};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Three-valued truth under the well-founded semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Truth {
    False = 0,
    True = 1,
    Undefined = 2,
}

impl Truth {
    pub fn code(self) -> i64 {
        self as i64
    }
}

/// One solution of a goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    /// The goal instantiated by the solution.
    pub goal: Term,
    /// Values of the goal's variables, in order of first appearance.
    pub bindings: Vec<(Var, Term)>,
    pub truth: Truth,
    /// Undefined literals the answer depends on; empty iff `truth` is true.
    pub residual: Vec<Term>,
}

/// Host-side predicates reachable from logic code.
pub trait Foreign {
    fn call(&mut self, engine: &Engine, module: Sym, goal: &Term) -> Result<Option<Term>>;
}

/// A [`Foreign`] with no host attached.
pub struct NoForeign;

impl Foreign for NoForeign {
    fn call(&mut self, _engine: &Engine, _module: Sym, goal: &Term) -> Result<Option<Term>> {
        let (name, arity) = goal.functor().unwrap_or((atoms::empty(), 0));
        Err(BridgeError::logic(
            ErrorKind::ExistenceError,
            format!("no host runtime attached for {}/{}", write_atom(name.as_str()), arity),
        ))
    }
}

const BUILTIN_NAMES: &[&str] = &[
    "true",
    "fail",
    "false",
    ",",
    ";",
    "=",
    "\\=",
    "==",
    "\\==",
    "is",
    "=:=",
    "=\\=",
    "<",
    ">",
    "=<",
    ">=",
    "findall",
    "\\+",
    "tnot",
    "call",
    ":",
    "pyfunc",
    "pydot",
    "free_object",
];

pub(crate) fn is_foreign(name: &str, arity: usize) -> bool {
    matches!((name, arity), ("pyfunc", 3 | 4) | ("pydot", 3 | 4) | ("free_object", 1))
}

/// Charges one step per node of `t`, stopping the walk once the budget runs out.
pub(crate) fn charge_size(steps: &Cell<u64>, t: &Term) -> Result<()> {
    let left = steps.get();
    let mut n = 0;
    let mut stack = vec![t];
    while let Some(t) = stack.pop() {
        n += 1;
        if n > left {
            steps.set(0);
            return Err(BridgeError::logic(ErrorKind::BudgetExceeded, "step budget exhausted"));
        }
        if let Term::Compound(c) = t {
            stack.extend(c.args());
        }
    }
    steps.set(left - n);
    Ok(())
}

fn vars_needed(goal: &Term) -> u32 {
    store::max_var_id(goal).map_or(0, |m| m + 1)
}

pub(crate) fn charge(steps: &Cell<u64>, n: u64) -> Result<()> {
    let left = steps.get();
    if left < n {
        steps.set(0);
        return Err(BridgeError::logic(ErrorKind::BudgetExceeded, "step budget exhausted"));
    }
    steps.set(left - n);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ArgKey {
    Var,
    Atom(Sym),
    Int(i64),
    Float(u64),
    Functor(Sym, usize),
}

impl ArgKey {
    pub(crate) fn of(t: &Term) -> ArgKey {
        match t {
            Term::Var(_) => ArgKey::Var,
            Term::Atom(s) => ArgKey::Atom(*s),
            Term::Int(i) => ArgKey::Int(*i),
            Term::Float(f) => ArgKey::Float(f.to_bits()),
            Term::Compound(c) => ArgKey::Functor(c.functor(), c.arity()),
        }
    }

    pub(crate) fn compatible(self, other: ArgKey) -> bool {
        self == ArgKey::Var || other == ArgKey::Var || self == other
    }
}

#[derive(Debug)]
pub(crate) struct ClauseEntry {
    pub clause: Clause,
    pub key: ArgKey,
}

#[derive(Debug)]
pub(crate) struct Pred {
    pub module: Sym,
    pub name: Sym,
    pub arity: usize,
    pub clauses: Vec<ClauseEntry>,
    pub tabled: bool,
}

impl Pred {
    /// Index of the first clause at or after `from` whose first head
    /// argument may match `key`.
    pub(crate) fn next_candidate(&self, key: ArgKey, from: usize) -> Option<usize> {
        (from..self.clauses.len()).find(|&i| self.clauses[i].key.compatible(key))
    }

    pub(crate) fn indicator(&self) -> String {
        format!(
            "{}:{}/{}",
            write_atom(self.module.as_str()),
            write_atom(self.name.as_str()),
            self.arity
        )
    }
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub budget: u64,
    pub occurs_check: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            budget: DEFAULT_BUDGET,
            occurs_check: false,
        }
    }
}

type TableKey = (Sym, Term);

/// Consulted programs, grouped by module, with completed tables.
pub struct Engine {
    preds: FxHashMap<(Sym, Sym, usize), Pred>,
    system: Sym,
    builtins: FxHashSet<Sym>,
    modules: Vec<Sym>,
    pub config: EngineConfig,
    tables: RefCell<FxHashMap<TableKey, Rc<Vec<TableAnswer>>>>,
}

const PRELUDE: &str = "
append([], L, L).
append([H|T], L, [H|R]) :- append(T, L, R).
member(X, [X|_]).
member(X, [_|T]) :- member(X, T).
length([], 0).
length([_|T], N) :- length(T, M), N is M + 1.
between(L, H, L) :- L =< H.
between(L, H, X) :- L < H, L1 is L + 1, between(L1, H, X).
";

pub const SYSTEM_MODULE: &str = "system";

fn control_construct(name: &str, arity: usize) -> bool {
    matches!(
        (name, arity),
        ("true" | "fail" | "false", 0)
            | (
                "," | ";" | "=" | "\\=" | "==" | "\\==" | "is" | "=:=" | "=\\=" | "<" | ">" | "=<" | ">=" | ":",
                2
            )
            | ("findall", 3)
            | ("tnot" | "\\+", 1)
    ) || (name == "call" && arity >= 1)
        || is_foreign(name, arity)
}

fn consult_error(kind: ErrorKind, index: usize, msg: impl fmt::Display) -> BridgeError {
    BridgeError::logic(kind, format!("clause {index}: {msg}"))
}

fn flatten_body(body: &Term, out: &mut Vec<Term>) {
    let mut cur = body.clone();
    loop {
        match &cur {
            Term::Compound(c) if c.functor() == atoms::comma() && c.arity() == 2 => {
                let (l, r) = (c.args()[0].clone(), c.args()[1].clone());
                flatten_body(&l, out);
                cur = r;
            }
            Term::Var(_) => {
                out.push(Term::compound_str("call", vec![cur]));
                return;
            }
            _ => {
                out.push(cur);
                return;
            }
        }
    }
}

fn table_specs(spec: &Term, out: &mut Vec<(Sym, usize)>) -> std::result::Result<(), String> {
    match spec {
        Term::Compound(c) if c.functor() == atoms::comma() && c.arity() == 2 => {
            table_specs(&c.args()[0], out)?;
            table_specs(&c.args()[1], out)
        }
        Term::Compound(c) if c.functor() == atoms::slash() && c.arity() == 2 => match (&c.args()[0], &c.args()[1]) {
            (Term::Atom(name), Term::Int(n)) if (0..=65535).contains(n) => {
                out.push((*name, *n as usize));
                Ok(())
            }
            _ => Err(format!("bad predicate indicator {spec}")),
        },
        _ if spec.is_proper_list() && !spec.is_nil() => {
            for item in spec.list_items().unwrap_or_default() {
                table_specs(&item, out)?;
            }
            Ok(())
        }
        _ => Err(format!("bad table specification {spec}")),
    }
}

enum Item {
    Clause(Clause),
    Table(Vec<(Sym, usize)>),
}

impl Default for Engine {
    fn default() -> Self {
        Engine::new()
    }
}

impl Engine {
    pub fn new() -> Engine {
        Engine::with_config(EngineConfig::default())
    }

    pub fn with_config(config: EngineConfig) -> Engine {
        let mut e = Engine {
            preds: FxHashMap::default(),
            system: Sym::intern(SYSTEM_MODULE),
            builtins: BUILTIN_NAMES.iter().map(|n| Sym::intern(n)).collect(),
            modules: Vec::new(),
            config,
            tables: RefCell::new(FxHashMap::default()),
        };
        e.consult_text(SYSTEM_MODULE, PRELUDE).expect("prelude parses");
        e
    }

    /// Adds the clauses and table directives of `program` to `module`.
    /// Nothing is added if any clause is malformed.
    pub fn consult_text(&mut self, module: &str, program: &str) -> Result<()> {
        let module = Sym::intern(module);
        let parsed = read_clauses(program)
            .map_err(|(index, e)| BridgeError::logic(ErrorKind::SyntaxError, format!("clause {index}: {e}")))?;
        let mut items = Vec::with_capacity(parsed.len());
        for (index, p) in parsed.into_iter().enumerate() {
            let t = p.term;
            let (head, body) = match &t {
                Term::Compound(c) if c.functor() == atoms::neck() && c.arity() == 1 => {
                    let d = &c.args()[0];
                    match d {
                        Term::Compound(dc) if dc.functor().as_str() == "table" && dc.arity() == 1 => {
                            let mut specs = Vec::new();
                            table_specs(&dc.args()[0], &mut specs)
                                .map_err(|m| consult_error(ErrorKind::DomainError, index, m))?;
                            items.push(Item::Table(specs));
                            continue;
                        }
                        _ => {
                            return Err(consult_error(
                                ErrorKind::DomainError,
                                index,
                                format!("unsupported directive {d}"),
                            ))
                        }
                    }
                }
                Term::Compound(c) if c.functor() == atoms::neck() && c.arity() == 2 => {
                    (c.args()[0].clone(), Some(c.args()[1].clone()))
                }
                _ => (t.clone(), None),
            };
            let Some((name, arity)) = head.functor() else {
                let kind = if head.is_var() {
                    ErrorKind::InstantiationError
                } else {
                    ErrorKind::TypeError
                };
                return Err(consult_error(
                    kind,
                    index,
                    format!("clause head {head} is not callable"),
                ));
            };
            if control_construct(name.as_str(), arity) {
                return Err(consult_error(
                    ErrorKind::PermissionError,
                    index,
                    format!("cannot redefine built-in {}/{}", write_atom(name.as_str()), arity),
                ));
            }
            let mut goals = Vec::new();
            if let Some(b) = &body {
                flatten_body(b, &mut goals);
            }
            if let Some(bad) = goals.iter().find(|g| matches!(g, Term::Int(_) | Term::Float(_))) {
                return Err(consult_error(
                    ErrorKind::TypeError,
                    index,
                    format!("body goal {bad} is not callable"),
                ));
            }
            let goals: Vec<Term> = goals
                .into_iter()
                .filter(|g| g.as_atom() != Some(atoms::true_()))
                .collect();
            items.push(Item::Clause(Clause {
                head,
                body: goals,
                var_count: p.var_count,
            }));
        }
        for item in items {
            match item {
                Item::Table(specs) => {
                    for (name, arity) in specs {
                        self.pred_entry(module, name, arity).tabled = true;
                    }
                }
                Item::Clause(clause) => {
                    let (name, arity) = clause.head.functor().expect("checked callable");
                    let key = clause.head.args().first().map(ArgKey::of).unwrap_or(ArgKey::Var);
                    self.pred_entry(module, name, arity)
                        .clauses
                        .push(ClauseEntry { clause, key });
                }
            }
        }
        if !self.modules.contains(&module) {
            self.modules.push(module);
        }
        self.tables.borrow_mut().clear();
        Ok(())
    }

    fn pred_entry(&mut self, module: Sym, name: Sym, arity: usize) -> &mut Pred {
        self.preds.entry((module, name, arity)).or_insert_with(|| Pred {
            module,
            name,
            arity,
            clauses: Vec::new(),
            tabled: false,
        })
    }

    pub(crate) fn is_builtin(&self, name: Sym) -> bool {
        self.builtins.contains(&name)
    }

    pub(crate) fn lookup(&self, module: Sym, name: Sym, arity: usize) -> Option<&Pred> {
        self.preds
            .get(&(module, name, arity))
            .or_else(|| self.preds.get(&(self.system, name, arity)))
    }

    pub fn has_module(&self, module: &str) -> bool {
        self.modules.iter().any(|m| m.as_str() == module)
    }

    pub fn is_tabled(&self, module: &str, name: &str, arity: usize) -> bool {
        self.lookup(Sym::intern(module), Sym::intern(name), arity)
            .is_some_and(|p| p.tabled)
    }

    pub fn is_defined(&self, module: &str, name: &str, arity: usize) -> bool {
        self.lookup(Sym::intern(module), Sym::intern(name), arity).is_some()
    }

    /// Number of clauses for a predicate visible from `module`.
    pub fn clause_count(&self, module: &str, name: &str, arity: usize) -> usize {
        self.lookup(Sym::intern(module), Sym::intern(name), arity)
            .map_or(0, |p| p.clauses.len())
    }

    pub fn new_budget(&self) -> Cell<u64> {
        Cell::new(self.config.budget)
    }

    /// Lazily enumerates the answers of `goal` in `module`.
    pub fn query<'a>(&'a self, module: &str, goal: &Term, foreign: &'a mut dyn Foreign) -> Query<'a> {
        let steps = Box::new(self.new_budget());
        Query::new(self, Sym::intern(module), goal, foreign, steps)
    }

    /// All answers of `goal`, in order.
    pub fn solve(&self, module: &str, goal: &Term, foreign: &mut dyn Foreign) -> Result<Vec<Answer>> {
        self.query(module, goal, foreign).collect()
    }

    /// First answer of `goal`, if any.
    pub fn solve_once(&self, module: &str, goal: &Term, foreign: &mut dyn Foreign) -> Result<Option<Answer>> {
        self.query(module, goal, foreign).next().transpose()
    }

    /// Instances of `template` for each answer of `goal`. Truth values are
    /// not inspected.
    pub fn findall_terms(&self, module: &str, template: &Term, goal: &Term, foreign: &mut dyn Foreign) -> Result<Term> {
        let answers = self.solve(module, goal, foreign)?;
        let mut out = Vec::with_capacity(answers.len());
        for a in answers {
            let mut s = Store::new(0, false);
            for (v, t) in &a.bindings {
                s.unify(&Term::Var(*v), t);
            }
            out.push(s.resolve(template));
        }
        Ok(Term::list(out))
    }

    /// The goal's answers under the well-founded semantics. Plain goals are
    /// evaluated through a fresh meta table that is discarded afterwards.
    pub fn wfs_evaluate(&self, module: &str, goal: &Term, foreign: &mut dyn Foreign) -> Result<Vec<Answer>> {
        let steps = self.new_budget();
        self.wfs_with(Sym::intern(module), goal, foreign, &steps)
    }

    pub(crate) fn wfs_with(
        &self,
        module: Sym,
        goal: &Term,
        foreign: &mut dyn Foreign,
        steps: &Cell<u64>,
    ) -> Result<Vec<Answer>> {
        let goal = match goal {
            Term::Var(_) => {
                return Err(BridgeError::logic(ErrorKind::InstantiationError, "goal is unbound"));
            }
            Term::Compound(c) if c.functor() == atoms::colon() && c.arity() == 2 => {
                return match &c.args()[0] {
                    Term::Atom(m) => self.wfs_with(*m, &c.args()[1], foreign, steps),
                    _ => Err(BridgeError::logic(
                        ErrorKind::TypeError,
                        "module qualifier must be an atom",
                    )),
                };
            }
            Term::Int(_) | Term::Float(_) => {
                return Err(BridgeError::logic(
                    ErrorKind::TypeError,
                    format!("goal {goal} is not callable"),
                ));
            }
            _ => goal,
        };
        let (name, arity) = goal.functor().expect("callable");
        let raw: Vec<(Term, Truth, Vec<Term>)> = match self.lookup(module, name, arity) {
            Some(p) if p.tabled => {
                let answers = tabling::table_answers(self, p.module, goal, foreign, steps)?;
                answers
                    .iter()
                    .map(|a| (a.term.clone(), a.truth, a.residual.clone()))
                    .collect()
            }
            _ => tabling::meta_answers(self, module, goal, foreign, steps)?,
        };
        let vars = goal.variables();
        let mut out = Vec::with_capacity(raw.len());
        for (inst, truth, residual) in raw {
            let mut s = Store::new(0, false);
            if !s.unify(goal, &inst) {
                continue;
            }
            let bindings = vars.iter().map(|v| (*v, s.resolve(&Term::Var(*v)))).collect();
            out.push(Answer {
                goal: inst,
                bindings,
                truth,
                residual,
            });
        }
        Ok(out)
    }

    /// Drops every completed table.
    pub fn abolish_tables(&self) {
        self.tables.borrow_mut().clear();
    }

    pub(crate) fn cached_table(&self, key: &TableKey) -> Option<Rc<Vec<TableAnswer>>> {
        self.tables.borrow().get(key).cloned()
    }

    pub(crate) fn store_table(&self, key: TableKey, answers: Rc<Vec<TableAnswer>>) {
        self.tables.borrow_mut().insert(key, answers);
    }
}

/// A lazy answer stream. Must be dropped before the next top-level call on
/// the same engine.
pub struct Query<'a> {
    machine: Machine<'a>,
    goal: Term,
    vars: Vec<Var>,
    done: bool,
}

impl<'a> Query<'a> {
    fn new(
        engine: &'a Engine,
        module: Sym,
        goal: &Term,
        foreign: &'a mut dyn Foreign,
        steps: Box<Cell<u64>>,
    ) -> Query<'a> {
        let vars = goal.variables();
        let mut machine = Machine::new(
            engine,
            foreign,
            machine::StepsRef::Owned(steps),
            Mode::Normal,
            vars_needed(goal),
        );
        machine.push_goal(goal.clone(), module);
        Query {
            machine,
            goal: goal.clone(),
            vars,
            done: false,
        }
    }
}

impl Iterator for Query<'_> {
    type Item = Result<Answer>;

    fn next(&mut self) -> Option<Result<Answer>> {
        if self.done {
            return None;
        }
        match self.machine.next_solution() {
            Ok(true) => {
                let goal = self.machine.resolve(&self.goal);
                if let Err(e) = charge_size(self.machine.steps(), &goal) {
                    self.done = true;
                    return Some(Err(e));
                }
                let bindings = self
                    .vars
                    .iter()
                    .map(|v| (*v, self.machine.resolve(&Term::Var(*v))))
                    .collect();
                let residual = self.machine.delays();
                let truth = if residual.is_empty() {
                    Truth::True
                } else {
                    Truth::Undefined
                };
                Some(Ok(Answer {
                    goal,
                    bindings,
                    truth,
                    residual,
                }))
            }
            Ok(false) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

#[cfg(test)]
mod tests;
