//! Interactive and scripted access to a janus bridge.
//!
//! A session reads one directive per line:
//!
//! ```text
//! ?- Goal.                  solve a goal, printing each answer with its truth value
//! :py module.func(args)     call a host function; `key=value` args become keywords
//! :consult file             load a logic program; its module becomes the current one
//! :bench name               run a benchmark and print its table
//! :quit                     end the session
//! ```
//!
//! Blank lines and lines starting with `%` are ignored.

use std::cell::RefCell;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::rc::Rc;

use janus_core::adapter::{AdapterClient, Endpoint, DEFAULT_TIMEOUT};
use janus_core::bench::{emit_table, run_selector, SuiteConfig};
use janus_core::bridge::Bridge;
use janus_core::engine::{Answer, EngineConfig, Truth, DEFAULT_BUDGET};
use janus_core::error::{BridgeError, ErrorKind};
use janus_core::host::HostValue;
use janus_core::runtime::{HostRuntime, LocalRuntime};
use janus_core::term::{parse_term_with_vars, write_term, Term};
use janus_core::xlate::XlateConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub const USAGE: &str = "directives: ?- Goal. | :py module.func(args) | :consult file | :bench name | :quit";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputMode {
    Plain,
    Terms,
    Json,
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub paths: Vec<PathBuf>,
    pub budget: u64,
    pub depth_limit: usize,
    pub output: OutputMode,
    pub seed: Option<u64>,
    pub adapter: Option<String>,
    pub bench: SuiteConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            paths: Vec::new(),
            budget: DEFAULT_BUDGET,
            depth_limit: XlateConfig::default().depth_limit,
            output: OutputMode::Plain,
            seed: None,
            adapter: None,
            bench: SuiteConfig::default(),
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Eval(BridgeError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Eval(e) if e.kind == ErrorKind::Io => 2,
            CliError::Eval(_) => 1,
        }
    }
}

impl From<BridgeError> for CliError {
    fn from(e: BridgeError) -> CliError {
        CliError::Eval(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Empty,
    Query(String),
    Py(String),
    Consult(String),
    Bench(String),
    Quit,
}

pub fn parse_directive(line: &str) -> Result<Directive, CliError> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('%') {
        return Ok(Directive::Empty);
    }
    if let Some(goal) = line.strip_prefix("?-") {
        return Ok(Directive::Query(goal.trim().to_string()));
    }
    let (word, rest) = match line.split_once(char::is_whitespace) {
        Some((w, r)) => (w, r.trim().to_string()),
        None => (line, String::new()),
    };
    let need_arg = |d: fn(String) -> Directive| {
        if rest.is_empty() {
            Err(CliError::Usage(format!("{word} needs an argument; {USAGE}")))
        } else {
            Ok(d(rest.clone()))
        }
    };
    match word {
        ":py" => need_arg(Directive::Py),
        ":consult" => need_arg(Directive::Consult),
        ":bench" => need_arg(Directive::Bench),
        ":quit" if rest.is_empty() => Ok(Directive::Quit),
        _ => Err(CliError::Usage(format!("unknown directive '{line}'; {USAGE}"))),
    }
}

/// Splits `module.func(args)` into the module name and the call term.
pub fn parse_host_call(text: &str) -> Result<(String, Term), CliError> {
    let bad = || CliError::Usage(format!("expected module.func(args), got '{text}'"));
    let (module, call) = text.split_once('.').ok_or_else(bad)?;
    let module = module.trim();
    if module.is_empty() || !module.chars().all(|c| c.is_alphanumeric() || c == '_') {
        return Err(bad());
    }
    let call = parse_term_with_vars(call.trim())
        .map_err(|e| CliError::Eval(e.into()))?
        .term;
    if !call.is_callable() {
        return Err(bad());
    }
    Ok((module.to_string(), call))
}

/// Moves `key=value` arguments of a call into a keyword list.
fn split_kwargs(call: Term) -> (Term, Term) {
    let Some((name, _)) = call.functor() else {
        return (call, Term::nil());
    };
    let is_kw = |t: &Term| matches!(t.functor(), Some((f, 2)) if f.as_str() == "=" && t.args()[0].as_atom().is_some());
    let (kw, pos): (Vec<Term>, Vec<Term>) = call.args().iter().cloned().partition(is_kw);
    if kw.is_empty() {
        return (call, Term::nil());
    }
    let call = if pos.is_empty() {
        Term::Atom(name)
    } else {
        Term::compound(name, pos)
    };
    (call, Term::list(kw))
}

fn truth_name(t: Truth) -> &'static str {
    match t {
        Truth::False => "false",
        Truth::True => "true",
        Truth::Undefined => "undefined",
    }
}

fn visible_bindings(a: &Answer) -> Vec<(String, String)> {
    a.bindings
        .iter()
        .filter_map(|(v, t)| {
            let name = v.name?.as_str();
            (!name.starts_with('_')).then(|| (name.to_string(), write_term(t)))
        })
        .collect()
}

fn residual_text(a: &Answer) -> Vec<String> {
    a.residual.iter().map(write_term).collect()
}

pub struct Session<W: Write> {
    bridge: Bridge,
    cfg: CliConfig,
    module: String,
    out: W,
}

fn warn_missing_paths(paths: &[PathBuf]) {
    for p in paths {
        if !p.is_dir() {
            eprintln!("warning: search path {} does not exist", p.display());
        }
    }
}

/// Builds the bridge a session or benchmark run uses.
pub fn build_bridge(cfg: &CliConfig) -> Result<Bridge, CliError> {
    let runtime: Box<dyn HostRuntime> = match &cfg.adapter {
        Some(text) => {
            let ep = Endpoint::parse(text).map_err(|e| CliError::Usage(e.message))?;
            Box::new(AdapterClient::connect(&ep, DEFAULT_TIMEOUT)?)
        }
        None => Box::new(LocalRuntime::new().with_search_path(cfg.paths.clone())),
    };
    let mut bridge = Bridge::with_runtime(
        runtime,
        EngineConfig {
            budget: cfg.budget,
            ..EngineConfig::default()
        },
    );
    let mut xlate = XlateConfig::default();
    xlate.depth_limit = cfg.depth_limit;
    bridge.set_xlate(xlate);

    let seed = cfg.seed.unwrap_or_else(rand::random);
    let rng = Rc::new(RefCell::new(ChaCha8Rng::seed_from_u64(seed)));
    let r = rng.clone();
    bridge.register_callback("random_int", move |_, args, _| {
        let (lo, hi) = match args.as_slice() {
            [HostValue::Int(lo), HostValue::Int(hi)] if lo <= hi => (*lo, *hi),
            _ => {
                return Err(BridgeError::host(
                    ErrorKind::TypeError,
                    "random_int expects two integers Lo =< Hi",
                ))
            }
        };
        Ok(HostValue::Int(r.borrow_mut().gen_range(lo..=hi)))
    });
    bridge.register_callback("random_float", move |_, _, _| {
        Ok(HostValue::Float(rng.borrow_mut().gen()))
    });
    Ok(bridge)
}

impl<W: Write> Session<W> {
    pub fn new(cfg: CliConfig, out: W) -> Result<Session<W>, CliError> {
        warn_missing_paths(&cfg.paths);
        Ok(Session {
            bridge: build_bridge(&cfg)?,
            cfg,
            module: "user".to_string(),
            out,
        })
    }

    pub fn module(&self) -> &str {
        &self.module
    }

    pub fn into_output(self) -> W {
        self.out
    }

    fn emit(&mut self, line: &str) {
        let _ = writeln!(self.out, "{line}");
    }

    /// Runs one directive. Returns `false` once the session should end.
    pub fn execute(&mut self, line: &str) -> Result<bool, CliError> {
        match parse_directive(line)? {
            Directive::Empty => {}
            Directive::Quit => return Ok(false),
            Directive::Query(goal) => self.query(&goal)?,
            Directive::Py(call) => self.host_call(&call)?,
            Directive::Consult(file) => self.consult(&file)?,
            Directive::Bench(name) => self.bench(&name)?,
        }
        let _ = self.out.flush();
        Ok(true)
    }

    fn query(&mut self, text: &str) -> Result<(), CliError> {
        let goal = parse_term_with_vars(text).map_err(BridgeError::from)?.term;
        let mode = self.cfg.output;
        let module = self.module.clone();
        let mut lines = Vec::new();
        let mut count = 0;
        let mut failure = None;
        for answer in self.bridge.query(&module, &goal) {
            match answer {
                Ok(a) => {
                    count += 1;
                    lines.push(format_answer(&a, mode));
                }
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
        }
        for line in lines {
            self.emit(&line);
        }
        if let Some(e) = failure {
            return Err(e.into());
        }
        if count == 0 {
            let line = match mode {
                OutputMode::Json => json!({"bindings": null, "truth": "false", "residual": []}).to_string(),
                _ => "false.".to_string(),
            };
            self.emit(&line);
        }
        Ok(())
    }

    fn host_call(&mut self, text: &str) -> Result<(), CliError> {
        let (module, call) = parse_host_call(text)?;
        let (call, kwargs) = split_kwargs(call);
        let result = self.bridge.pyfunc(&Term::atom(&module), &call, &kwargs)?;
        let line = match self.cfg.output {
            OutputMode::Json => {
                let repr = self.bridge.host().to_value(&result).map(|v| format!("{v:?}"))?;
                json!({"value": write_term(&result), "repr": repr}).to_string()
            }
            _ => write_term(&result),
        };
        self.emit(&line);
        Ok(())
    }

    fn resolve(&self, file: &str) -> Option<PathBuf> {
        let candidates = |dir: Option<&Path>| {
            ["", ".P", ".pl"].map(|ext| {
                let name = format!("{file}{ext}");
                dir.map_or_else(|| PathBuf::from(&name), |d| d.join(&name))
            })
        };
        std::iter::once(None)
            .chain(self.cfg.paths.iter().map(|p| Some(p.as_path())))
            .flat_map(candidates)
            .find(|p| p.is_file())
    }

    fn consult(&mut self, file: &str) -> Result<(), CliError> {
        let path = self
            .resolve(file)
            .ok_or_else(|| CliError::Eval(BridgeError::logic(ErrorKind::Io, format!("{file}: no such file"))))?;
        self.module = self.bridge.consult_file(&path)?;
        let line = match self.cfg.output {
            OutputMode::Json => json!({"consulted": file, "module": self.module}).to_string(),
            _ => format!("% consulted {file} as module {}", self.module),
        };
        self.emit(&line);
        Ok(())
    }

    fn bench(&mut self, name: &str) -> Result<(), CliError> {
        let rows = run_selector(name, &self.cfg.bench)?;
        let report = emit_table(&rows)?;
        let text = match self.cfg.output {
            OutputMode::Json => report.csv,
            _ => report.table,
        };
        let _ = write!(self.out, "{text}");
        if let Some(r) = rows.iter().find(|r| !r.leak_free()) {
            return Err(BridgeError::host(
                ErrorKind::DomainError,
                format!(
                    "{} leaked {} host objects",
                    r.name,
                    r.live_after as i64 - r.live_before as i64
                ),
            )
            .into());
        }
        Ok(())
    }

    pub fn report(&mut self, e: &CliError) {
        let lines = format_error(e, self.cfg.output);
        for line in lines {
            self.emit(&line);
        }
        let _ = self.out.flush();
    }
}

pub fn format_answer(a: &Answer, mode: OutputMode) -> String {
    match mode {
        OutputMode::Plain => {
            let b = visible_bindings(a);
            let mut text = if b.is_empty() {
                "yes".to_string()
            } else {
                b.iter()
                    .map(|(n, v)| format!("{n} = {v}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            match a.truth {
                Truth::True => text.push_str("  [true]"),
                t => {
                    text.push_str(&format!("  [{}: {}]", truth_name(t), residual_text(a).join(", ")));
                }
            }
            text
        }
        OutputMode::Terms => match a.truth {
            Truth::True => format!("{}.", write_term(&a.goal)),
            _ => format!("{} :- {}.", write_term(&a.goal), residual_text(a).join(", ")),
        },
        OutputMode::Json => {
            let bindings: serde_json::Map<String, serde_json::Value> =
                visible_bindings(a).into_iter().map(|(n, v)| (n, v.into())).collect();
            json!({"bindings": bindings, "truth": truth_name(a.truth), "residual": residual_text(a)}).to_string()
        }
    }
}

pub fn format_error(e: &CliError, mode: OutputMode) -> Vec<String> {
    match (e, mode) {
        (CliError::Usage(msg), OutputMode::Json) => {
            vec![json!({"error": {"kind": "Usage", "message": msg}}).to_string()]
        }
        (CliError::Usage(msg), _) => vec![format!("error: {msg}")],
        (CliError::Eval(e), OutputMode::Json) => vec![json!({"error": {
            "origin": e.origin.to_string(),
            "kind": e.kind.name(),
            "message": e.message,
            "logic_backtrace": e.logic_backtrace,
            "host_backtrace": e.host_backtrace,
        }})
        .to_string()],
        (CliError::Eval(e), _) => {
            let mut lines = vec![format!("error: {e}")];
            lines.extend(e.logic_backtrace.iter().map(|f| format!("  logic: {f}")));
            lines.extend(e.host_backtrace.iter().map(|f| format!("  host: {f}")));
            lines
        }
    }
}

/// Reads directives until end of input or `:quit`, reporting errors and
/// carrying on.
pub fn repl<R: BufRead, W: Write>(session: &mut Session<W>, input: R, prompt: bool) -> u8 {
    let mut stderr = std::io::stderr();
    if prompt {
        let _ = write!(stderr, "janus> ");
        let _ = stderr.flush();
    }
    for line in input.lines() {
        let Ok(line) = line else {
            session.report(&CliError::Usage("input is not valid UTF-8".into()));
            continue;
        };
        match session.execute(&line) {
            Ok(true) => {}
            Ok(false) => return 0,
            Err(e) => session.report(&e),
        }
        if prompt {
            let _ = write!(stderr, "janus> ");
            let _ = stderr.flush();
        }
    }
    0
}

/// Runs a script, stopping at the first error.
pub fn run_script<W: Write>(session: &mut Session<W>, path: &Path) -> u8 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return 2;
        }
    };
    for (n, line) in text.lines().enumerate() {
        match session.execute(line) {
            Ok(true) => {}
            Ok(false) => return 0,
            Err(e) => {
                session.report(&e);
                eprintln!("{}:{}: stopped", path.display(), n + 1);
                return e.exit_code();
            }
        }
    }
    0
}

/// Runs benchmarks by selector, prints the table and writes the CSV to
/// `out` (or prints it after the table).
pub fn bench_command<W: Write>(cfg: &CliConfig, selectors: &[String], out_path: Option<&Path>, out: &mut W) -> u8 {
    for s in selectors {
        if let Err(e) = janus_core::bench::validate_selector(s) {
            eprintln!("error: {}", e.message);
            return 2;
        }
    }
    let mut rows = Vec::new();
    for s in selectors {
        match run_selector(s, &cfg.bench) {
            Ok(r) => rows.extend(r),
            Err(e) => {
                eprintln!("error: {e}");
                return 1;
            }
        }
    }
    let report = match emit_table(&rows) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let _ = write!(out, "{}", report.table);
    match out_path {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &report.csv) {
                eprintln!("error: {}: {e}", p.display());
                return 2;
            }
        }
        None => {
            let _ = write!(out, "\n{}", report.csv);
        }
    }
    let leaks: Vec<&str> = rows
        .iter()
        .filter(|r| !r.leak_free())
        .map(|r| r.name.as_str())
        .collect();
    if !leaks.is_empty() {
        eprintln!("error: host objects leaked in {}", leaks.join(", "));
        return 1;
    }
    0
}
