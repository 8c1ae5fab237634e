//! The two-way call surface between the logic engine and a host runtime.
//!
//! Logic code reaches the host through `pyfunc/3,4`, `pydot/3,4` and
//! `free_object/1`. Host code queries the engine through [`Ctx`]: single
//! answers with [`Ctx::jns_qdet`] and [`Ctx::jns_cmd`], whole answer
//! collections with [`Ctx::jns_comp`]. Host callbacks registered under the
//! pseudo-module `callbacks` get a [`Ctx`] of their own and may query the
//! engine again, up to [`MAX_CALLBACK_DEPTH`] levels deep.

mod flags;

use std::collections::HashMap;
use std::path::Path;
use std::rc::Rc;

pub use flags::{QueryFlags, TruthMode};

use crate::engine::{Answer, Engine, EngineConfig, Foreign, Query, Truth};
use crate::error::{BridgeError, ErrorKind, Result};
use crate::host::{HostValue, ObjectHandle};
use crate::runtime::{HostRuntime, Kwargs, LocalRuntime};
use crate::term::{atoms, compare_terms, parse_term_with_vars, write_term, Sym, SyntaxError, Term};
use crate::xlate::{self, XlateConfig, XlateError};

pub const MAX_CALLBACK_DEPTH: usize = 64;
pub const CALLBACK_MODULE: &str = "callbacks";

pub type Callback = Rc<dyn Fn(&mut Ctx<'_>, Vec<HostValue>, Kwargs) -> Result<HostValue>>;

impl From<XlateError> for BridgeError {
    fn from(e: XlateError) -> BridgeError {
        let kind = match &e {
            XlateError::Instantiation => ErrorKind::InstantiationError,
            XlateError::Domain(_) => ErrorKind::DomainError,
            XlateError::DanglingHandle(_) => ErrorKind::DanglingHandle,
            XlateError::Limit(_) => ErrorKind::LimitError,
            XlateError::DepthLimit(_) => ErrorKind::DepthLimit,
        };
        BridgeError::logic(kind, e.to_string())
    }
}

impl From<SyntaxError> for BridgeError {
    fn from(e: SyntaxError) -> BridgeError {
        BridgeError::logic(ErrorKind::SyntaxError, e.to_string())
    }
}

fn logic_error(kind: ErrorKind, message: impl Into<String>) -> BridgeError {
    BridgeError::logic(kind, message)
}

/// Host half of a bridge: the runtime, translation settings and callbacks.
pub struct HostCtx {
    runtime: Box<dyn HostRuntime>,
    xlate: XlateConfig,
    callbacks: HashMap<String, Callback>,
    depth: usize,
}

impl HostCtx {
    pub fn new(runtime: Box<dyn HostRuntime>) -> HostCtx {
        HostCtx {
            runtime,
            xlate: XlateConfig::default(),
            callbacks: HashMap::new(),
            depth: 0,
        }
    }

    pub fn runtime(&self) -> &dyn HostRuntime {
        &*self.runtime
    }

    pub fn runtime_mut(&mut self) -> &mut dyn HostRuntime {
        &mut *self.runtime
    }

    pub fn xlate(&self) -> &XlateConfig {
        &self.xlate
    }

    pub fn to_value(&self, t: &Term) -> Result<HostValue> {
        Ok(xlate::term_to_value(t, &self.xlate, &*self.runtime)?)
    }

    pub fn to_term(&self, v: &HostValue) -> Result<Term> {
        Ok(xlate::value_to_term(v, &self.xlate, &*self.runtime)?)
    }

    fn kwargs(&self, t: &Term) -> Result<Kwargs> {
        if t.is_var() {
            return Err(logic_error(ErrorKind::InstantiationError, "keyword list is unbound"));
        }
        let items = t
            .list_items()
            .ok_or_else(|| logic_error(ErrorKind::TypeError, format!("keyword arguments {t} are not a list")))?;
        let mut out = Kwargs::new();
        for item in items {
            let pair = item
                .as_compound()
                .filter(|c| c.functor() == atoms::eq() && c.arity() == 2);
            let Some(pair) = pair else {
                return Err(logic_error(
                    ErrorKind::DomainError,
                    format!("keyword argument {item} is not Key=Value"),
                ));
            };
            let key = match &pair.args()[0] {
                Term::Atom(k) => k.as_str().to_string(),
                Term::Var(_) => return Err(logic_error(ErrorKind::InstantiationError, "keyword name is unbound")),
                other => {
                    return Err(logic_error(
                        ErrorKind::TypeError,
                        format!("keyword name {other} is not an atom"),
                    ))
                }
            };
            out.insert(key, self.to_value(&pair.args()[1])?);
        }
        Ok(out)
    }

    fn callable(&self, t: &Term) -> Result<(String, Vec<HostValue>)> {
        match t {
            Term::Atom(name) => Ok((name.as_str().to_string(), Vec::new())),
            Term::Compound(c) => {
                let args = c.args().iter().map(|a| self.to_value(a)).collect::<Result<_>>()?;
                Ok((c.functor().as_str().to_string(), args))
            }
            Term::Var(_) => Err(logic_error(ErrorKind::InstantiationError, "host call is unbound")),
            other => Err(logic_error(
                ErrorKind::TypeError,
                format!("host call {other} is not callable"),
            )),
        }
    }

    fn module_name(t: &Term) -> Result<&'static str> {
        match t {
            Term::Atom(m) => Ok(m.as_str()),
            Term::Var(_) => Err(logic_error(ErrorKind::InstantiationError, "module is unbound")),
            other => Err(logic_error(
                ErrorKind::TypeError,
                format!("module {other} is not an atom"),
            )),
        }
    }

    fn handle(&self, t: &Term) -> Result<ObjectHandle> {
        match self.to_value(t)? {
            HostValue::ObjRef(h) => Ok(h),
            other => Err(logic_error(
                ErrorKind::TypeError,
                format!("expected an object reference, got {}", other.type_name()),
            )),
        }
    }

    /// `pyfunc(Module, Call, Kwargs, Result)` with `Result` returned.
    pub fn pyfunc(&mut self, engine: &Engine, module: &Term, call: &Term, kwargs: &Term) -> Result<Term> {
        self.runtime.clear_error();
        let module = HostCtx::module_name(module)?;
        let (name, args) = self.callable(call)?;
        let kwargs = self.kwargs(kwargs)?;
        let value = if module == CALLBACK_MODULE {
            self.run_callback(engine, &name, args, kwargs)?
        } else {
            self.runtime.call(module, &name, args, kwargs)?
        };
        self.to_term(&value)
    }

    /// `pydot(Obj, MethodOrAttr, Kwargs, Result)`. An atom names an
    /// attribute, or a method taking no arguments when the object has no
    /// such attribute.
    pub fn pydot(&mut self, obj: &Term, call: &Term, kwargs: &Term) -> Result<Term> {
        self.runtime.clear_error();
        let h = self.handle(obj)?;
        let kwargs = self.kwargs(kwargs)?;
        let value = match call {
            Term::Atom(name) if kwargs.is_empty() => match self.runtime.get_attribute(h, name.as_str()) {
                Err(e) if e.kind == ErrorKind::NoSuchAttribute => {
                    match self.runtime.call_method(h, name.as_str(), Vec::new(), Kwargs::new()) {
                        Err(m) if m.kind == ErrorKind::NoSuchMethod => {
                            self.runtime.clear_error();
                            Err(e)
                        }
                        r => r,
                    }
                }
                r => r,
            }?,
            _ => {
                let (name, args) = self.callable(call)?;
                self.runtime.call_method(h, &name, args, kwargs)?
            }
        };
        self.to_term(&value)
    }

    pub fn free_object(&mut self, obj: &Term) -> Result<()> {
        self.runtime.clear_error();
        let h = self.handle(obj)?;
        self.runtime.release(h)
    }

    fn run_callback(&mut self, engine: &Engine, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue> {
        let f = self
            .callbacks
            .get(name)
            .cloned()
            .ok_or_else(|| BridgeError::host(ErrorKind::NotCallable, format!("no callback named '{name}'")))?;
        if self.depth >= MAX_CALLBACK_DEPTH {
            return Err(BridgeError::host(
                ErrorKind::NestingLimit,
                format!("callbacks nested deeper than {MAX_CALLBACK_DEPTH}"),
            ));
        }
        self.depth += 1;
        let r = f(&mut Ctx { engine, host: self }, args, kwargs);
        self.depth -= 1;
        r
    }
}

fn replace_last(goal: &Term, value: Term) -> Term {
    let c = goal.as_compound().expect("foreign goal is compound");
    let mut args = c.args().to_vec();
    *args.last_mut().expect("foreign goal has arguments") = value;
    Term::compound(c.functor(), args)
}

impl Foreign for HostCtx {
    fn call(&mut self, engine: &Engine, _module: Sym, goal: &Term) -> Result<Option<Term>> {
        let (name, arity) = goal.functor().expect("foreign goal is compound");
        let a = goal.args();
        let nil = Term::nil();
        let out = match (name.as_str(), arity) {
            ("pyfunc", 3) => self.pyfunc(engine, &a[0], &a[1], &nil)?,
            ("pyfunc", 4) => self.pyfunc(engine, &a[0], &a[1], &a[2])?,
            ("pydot", 3) => self.pydot(&a[0], &a[1], &nil)?,
            ("pydot", 4) => self.pydot(&a[0], &a[1], &a[2])?,
            ("free_object", 1) => {
                self.free_object(&a[0])?;
                return Ok(Some(goal.clone()));
            }
            _ => {
                return Err(logic_error(
                    ErrorKind::ExistenceError,
                    format!("unknown foreign predicate {name}/{arity}"),
                ))
            }
        };
        Ok(Some(replace_last(goal, out)))
    }
}

/// The engine paired with the host half, as seen by host code.
pub struct Ctx<'a> {
    pub engine: &'a Engine,
    pub host: &'a mut HostCtx,
}

fn goal_with_vars(host: &HostCtx, pred: &str, args: &[HostValue], vars: u32) -> Result<(Term, usize)> {
    let mut terms = Vec::with_capacity(args.len() + vars as usize);
    for a in args {
        terms.push(host.to_term(a)?);
    }
    let fixed = terms.len();
    terms.extend((0..vars).map(Term::var));
    let goal = Term::try_compound(Sym::intern(pred), terms).unwrap_or_else(|| Term::atom(pred));
    Ok((goal, fixed))
}

impl Ctx<'_> {
    /// First answer of `module:pred(Args..., Return)` as `(Return, truth)`,
    /// or `(Null, False)` when the goal fails.
    pub fn jns_qdet(&mut self, module: &str, pred: &str, args: &[HostValue]) -> Result<(HostValue, Truth)> {
        let (goal, fixed) = goal_with_vars(self.host, pred, args, 1)?;
        match self.engine.solve_once(module, &goal, self.host)? {
            Some(a) => Ok((self.host.to_value(&a.goal.args()[fixed])?, a.truth)),
            None => Ok((HostValue::Null, Truth::False)),
        }
    }

    /// Truth of the first answer of `module:pred(Args...)`.
    pub fn jns_cmd(&mut self, module: &str, pred: &str, args: &[HostValue]) -> Result<Truth> {
        let (goal, _) = goal_with_vars(self.host, pred, args, 0)?;
        Ok(self
            .engine
            .solve_once(module, &goal, self.host)?
            .map_or(Truth::False, |a| a.truth))
    }

    /// `module:pred(Term)` where `Term` is read from `argstring`.
    pub fn command_string(&mut self, module: &str, pred: &str, argstring: &str) -> Result<Truth> {
        let parsed = parse_term_with_vars(argstring)?;
        let goal = Term::compound(Sym::intern(pred), vec![parsed.term]);
        Ok(self
            .engine
            .solve_once(module, &goal, self.host)?
            .map_or(Truth::False, |a| a.truth))
    }

    /// All answers of `module:pred(Args..., V1, ..., Vn)` as binding tuples,
    /// each paired with its truth value or residual unless the truth mode
    /// is `None`.
    pub fn jns_comp(&mut self, module: &str, pred: &str, args: &[HostValue], flags: QueryFlags) -> Result<HostValue> {
        let (goal, fixed) = goal_with_vars(self.host, pred, args, flags.vars)?;
        let answers: Vec<Answer> = match flags.truth {
            TruthMode::None => self.engine.solve(module, &goal, self.host)?,
            _ => self.engine.wfs_evaluate(module, &goal, self.host)?,
        };
        let mut rows: Vec<(Vec<Term>, Answer)> = answers
            .into_iter()
            .map(|a| (a.goal.args()[fixed..].to_vec(), a))
            .collect();
        if flags.set {
            let key = |(b, a): &(Vec<Term>, Answer)| -> Term {
                let status = match flags.truth {
                    TruthMode::None => Term::nil(),
                    TruthMode::Plain => Term::Int(a.truth.code()),
                    TruthMode::DelayLists => Term::list(a.residual.clone()),
                };
                Term::list([Term::list(b.clone()), status])
            };
            rows.sort_by(|x, y| compare_terms(&key(x), &key(y)));
            rows.dedup_by(|x, y| compare_terms(&key(x), &key(y)).is_eq());
        }
        let mut out = Vec::with_capacity(rows.len());
        for (bindings, a) in rows {
            let values = bindings
                .iter()
                .map(|t| self.host.to_value(t))
                .collect::<Result<Vec<_>>>()?;
            let tuple = HostValue::Tuple(values);
            let item = match flags.truth {
                TruthMode::None => tuple,
                TruthMode::Plain => HostValue::Tuple(vec![tuple, HostValue::Int(a.truth.code())]),
                TruthMode::DelayLists => {
                    let lits: Vec<HostValue> = a.residual.iter().map(|l| HostValue::Text(write_term(l))).collect();
                    let residual = if flags.set {
                        HostValue::Tuple(lits)
                    } else {
                        HostValue::Sequence(lits)
                    };
                    HostValue::Tuple(vec![tuple, residual])
                }
            };
            out.push(item);
        }
        if flags.set {
            Ok(HostValue::set_from(out)?)
        } else {
            Ok(HostValue::Sequence(out))
        }
    }

    /// All answers of a goal, with host calls routed through this context.
    pub fn solve(&mut self, module: &str, goal: &Term) -> Result<Vec<Answer>> {
        self.engine.solve(module, goal, self.host)
    }

    /// Answers of a goal under the well-founded semantics.
    pub fn wfs_evaluate(&mut self, module: &str, goal: &Term) -> Result<Vec<Answer>> {
        self.engine.wfs_evaluate(module, goal, self.host)
    }

    pub fn call_host(&mut self, module: &str, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue> {
        self.host.runtime.clear_error();
        self.host.runtime.call(module, name, args, kwargs)
    }
}

/// One logic engine and one host runtime.
pub struct Bridge {
    engine: Engine,
    host: HostCtx,
}

impl Default for Bridge {
    fn default() -> Self {
        Bridge::new()
    }
}

impl Bridge {
    pub fn new() -> Bridge {
        Bridge::with_runtime(Box::new(LocalRuntime::new()), EngineConfig::default())
    }

    pub fn with_runtime(runtime: Box<dyn HostRuntime>, config: EngineConfig) -> Bridge {
        Bridge {
            engine: Engine::with_config(config),
            host: HostCtx::new(runtime),
        }
    }

    pub fn set_xlate(&mut self, cfg: XlateConfig) {
        self.host.xlate = cfg;
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut Engine {
        &mut self.engine
    }

    pub fn host(&self) -> &HostCtx {
        &self.host
    }

    pub fn host_mut(&mut self) -> &mut HostCtx {
        &mut self.host
    }

    pub fn ctx(&mut self) -> Ctx<'_> {
        Ctx {
            engine: &self.engine,
            host: &mut self.host,
        }
    }

    pub fn live_count(&self) -> usize {
        self.host.runtime.live_count()
    }

    pub fn consult_text(&mut self, module: &str, program: &str) -> Result<()> {
        self.engine.consult_text(module, program)
    }

    /// Consults a file into the module named by its stem.
    pub fn consult_file(&mut self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| logic_error(ErrorKind::Io, format!("{}: {e}", path.display())))?;
        let module = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| logic_error(ErrorKind::Io, format!("{}: no module name", path.display())))?
            .to_string();
        self.engine.consult_text(&module, &text)?;
        Ok(module)
    }

    pub fn register_callback<F>(&mut self, name: &str, f: F)
    where
        F: Fn(&mut Ctx<'_>, Vec<HostValue>, Kwargs) -> Result<HostValue> + 'static,
    {
        self.host.callbacks.insert(name.to_string(), Rc::new(f));
    }

    pub fn jns_qdet(&mut self, module: &str, pred: &str, args: &[HostValue]) -> Result<(HostValue, Truth)> {
        self.ctx().jns_qdet(module, pred, args)
    }

    pub fn jns_cmd(&mut self, module: &str, pred: &str, args: &[HostValue]) -> Result<Truth> {
        self.ctx().jns_cmd(module, pred, args)
    }

    pub fn jns_comp(&mut self, module: &str, pred: &str, args: &[HostValue], flags: QueryFlags) -> Result<HostValue> {
        self.ctx().jns_comp(module, pred, args, flags)
    }

    pub fn command_string(&mut self, module: &str, pred: &str, argstring: &str) -> Result<Truth> {
        self.ctx().command_string(module, pred, argstring)
    }

    pub fn solve(&mut self, module: &str, goal: &Term) -> Result<Vec<Answer>> {
        self.ctx().solve(module, goal)
    }

    pub fn wfs_evaluate(&mut self, module: &str, goal: &Term) -> Result<Vec<Answer>> {
        self.ctx().wfs_evaluate(module, goal)
    }

    /// Answers of `goal` produced one at a time.
    pub fn query(&mut self, module: &str, goal: &Term) -> Query<'_> {
        self.engine.query(module, goal, &mut self.host)
    }

    pub fn call_host(&mut self, module: &str, name: &str, args: Vec<HostValue>, kwargs: Kwargs) -> Result<HostValue> {
        self.ctx().call_host(module, name, args, kwargs)
    }

    /// Logic-side `pyfunc(Module, Call, Kwargs, Result)`, returning `Result`.
    pub fn pyfunc(&mut self, module: &Term, call: &Term, kwargs: &Term) -> Result<Term> {
        self.host.pyfunc(&self.engine, module, call, kwargs)
    }

    pub fn pydot(&mut self, obj: &Term, call: &Term, kwargs: &Term) -> Result<Term> {
        self.host.pydot(obj, call, kwargs)
    }

    pub fn free_object(&mut self, obj: &Term) -> Result<()> {
        self.host.free_object(obj)
    }
}

#[cfg(test)]
mod tests;
