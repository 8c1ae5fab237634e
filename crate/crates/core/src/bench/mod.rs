//! Microbenchmarks for calls inside and across the two runtimes, and for
//! per-element transfer cost.

mod table;

use std::fmt;
use std::hint::black_box;
use std::time::Instant;

pub use table::{emit_table, Report, CSV_HEADER};

use crate::bridge::{Bridge, QueryFlags};
use crate::engine::EngineConfig;
use crate::error::{BridgeError, ErrorKind, Result};
use crate::host::HostValue;
use crate::runtime::{Kwargs, LocalRuntime};
use crate::term::Term;

pub const RUNS: usize = 3;
pub const MIN_ITERS: u64 = 10_000;
pub const TUPLE_CAP: usize = 10_000;
pub const HAVERSINE_KM: f64 = 2886.444;
const HAVERSINE_ARGS: [f64; 4] = [36.12, -86.67, 33.94, -118.40];

const PROGRAM: &str = "
dec(N, M) :- M is N - 1.
loop(0).
loop(N) :- N > 0, dec(N, M), loop(M).
hloop(0).
hloop(N) :- N > 0, pyfunc(jns_demo, dec(N), M), hloop(M).

hav(Lat1, Lon1, Lat2, Lon2, D) :-
    P is pi / 180,
    DLat is (Lat2 - Lat1) * P,
    DLon is (Lon2 - Lon1) * P,
    A is sin(DLat / 2) ** 2 + cos(Lat1 * P) * cos(Lat2 * P) * sin(DLon / 2) ** 2,
    D is 2 * 6371.0 * asin(sqrt(A)).
havloop(0).
havloop(N) :- N > 0, hav(36.12, -86.67, 33.94, -118.40, _), M is N - 1, havloop(M).
hhavloop(0).
hhavloop(N) :- N > 0, pyfunc(math, haversine(36.12, -86.67, 33.94, -118.40), _), M is N - 1, hhavloop(M).

item(1). item(2). item(3). item(4). item(5). item(6). item(7). item(8). item(9). item(10).
item(11). item(12). item(13). item(14). item(15). item(16). item(17). item(18). item(19). item(20).
lcloop(0).
lcloop(N) :- N > 0, findall(X, item(X), _), M is N - 1, lcloop(M).
hlcloop(0).
hlcloop(N) :- N > 0, pyfunc(jns_demo, make_list(20), _), M is N - 1, hlcloop(M).
";

const MODULE: &str = "bench";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    LogicOnly,
    HostOnly,
    LogicToHost,
    HostToLogic,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::LogicOnly,
        Direction::HostOnly,
        Direction::LogicToHost,
        Direction::HostToLogic,
    ];

    /// Accepts the display names and the ASCII forms `logic-to-host` and
    /// `host-to-logic`.
    pub fn parse(text: &str) -> Option<Direction> {
        match text {
            "logic-to-host" => Some(Direction::LogicToHost),
            "host-to-logic" => Some(Direction::HostToLogic),
            _ => Direction::ALL.into_iter().find(|d| d.name() == text),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::LogicOnly => "logic-only",
            Direction::HostOnly => "host-only",
            Direction::LogicToHost => "logic->host",
            Direction::HostToLogic => "host->logic",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Tuple,
    List,
    Set,
    Map,
}

impl Shape {
    pub const ALL: [Shape; 4] = [Shape::Tuple, Shape::List, Shape::Set, Shape::Map];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Tuple => "tuple",
            Shape::List => "list",
            Shape::Set => "set",
            Shape::Map => "map",
        }
    }

    pub fn parse(text: &str) -> Option<Shape> {
        Shape::ALL.into_iter().find(|s| s.name() == text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub name: String,
    pub direction: Direction,
    pub iters: u64,
    /// Smallest total over the timed runs.
    pub total_ns: u64,
    pub per_op_ns: f64,
    pub per_elt_ns: Option<f64>,
    pub live_before: usize,
    pub live_after: usize,
}

impl BenchResult {
    pub fn new(name: impl Into<String>, direction: Direction, iters: u64, total_ns: u64) -> BenchResult {
        BenchResult {
            name: name.into(),
            direction,
            iters,
            total_ns,
            per_op_ns: total_ns as f64 / iters as f64,
            per_elt_ns: None,
            live_before: 0,
            live_after: 0,
        }
    }

    pub fn with_elements(mut self, elements: usize) -> BenchResult {
        self.per_elt_ns = Some(self.per_op_ns / elements.max(1) as f64);
        self
    }

    pub fn leak_free(&self) -> bool {
        self.live_before == self.live_after
    }
}

fn bench_error(kind: ErrorKind, message: impl Into<String>) -> BridgeError {
    BridgeError::host(kind, message)
}

fn new_bridge() -> Result<Bridge> {
    let mut b = Bridge::with_runtime(
        Box::new(LocalRuntime::new()),
        EngineConfig {
            budget: u64::MAX,
            ..EngineConfig::default()
        },
    );
    b.consult_text(MODULE, PROGRAM)?;
    Ok(b)
}

fn check_iters(iters: u64) -> Result<()> {
    if iters < MIN_ITERS {
        return Err(bench_error(
            ErrorKind::DomainError,
            format!("need at least {MIN_ITERS} iterations, got {iters}"),
        ));
    }
    Ok(())
}

/// Runs `body(n)` for a warm-up of a tenth of `iters`, then times
/// `body(iters)`; repeats [`RUNS`] times and keeps the fastest.
fn measure(iters: u64, mut body: impl FnMut(&mut Bridge, u64) -> Result<()>, b: &mut Bridge) -> Result<u64> {
    let warm = iters.div_ceil(10);
    let mut best = u64::MAX;
    for _ in 0..RUNS {
        body(b, warm)?;
        let start = Instant::now();
        body(b, iters)?;
        best = best.min(start.elapsed().as_nanos().max(1) as u64);
    }
    Ok(best)
}

fn run(
    name: &str,
    direction: Direction,
    iters: u64,
    body: impl FnMut(&mut Bridge, u64) -> Result<()>,
) -> Result<BenchResult> {
    let mut b = new_bridge()?;
    let live_before = b.live_count();
    let total = measure(iters, body, &mut b)?;
    let mut r = BenchResult::new(name, direction, iters, total);
    r.live_before = live_before;
    r.live_after = b.live_count();
    Ok(r)
}

fn logic_loop(b: &mut Bridge, pred: &str, n: u64) -> Result<()> {
    let goal = Term::compound_str(pred, vec![Term::Int(n as i64)]);
    match b.solve(MODULE, &goal)?.len() {
        1 => Ok(()),
        k => Err(bench_error(
            ErrorKind::DomainError,
            format!("{pred}({n}) gave {k} answers"),
        )),
    }
}

fn no_kwargs() -> Kwargs {
    Kwargs::new()
}

pub fn bench_simple_loop(direction: Direction, iters: u64) -> Result<BenchResult> {
    check_iters(iters)?;
    run("simple_loop", direction, iters, |b, n| match direction {
        Direction::LogicOnly => logic_loop(b, "loop", n),
        Direction::LogicToHost => logic_loop(b, "hloop", n),
        Direction::HostOnly => {
            let mut i = n as i64;
            while i > 0 {
                i = black_box(b.call_host("jns_demo", "dec", vec![HostValue::Int(i)], no_kwargs())?)
                    .as_int()
                    .unwrap_or(0);
            }
            Ok(())
        }
        Direction::HostToLogic => {
            let mut i = n as i64;
            while i > 0 {
                i = b.jns_qdet(MODULE, "dec", &[HostValue::Int(i)])?.0.as_int().unwrap_or(0);
            }
            Ok(())
        }
    })
}

fn check_km(km: Option<f64>, direction: Direction) -> Result<()> {
    match km {
        Some(km) if (km - HAVERSINE_KM).abs() <= 1e-3 => Ok(()),
        other => Err(bench_error(
            ErrorKind::DomainError,
            format!("{direction} haversine gave {other:?}, expected {HAVERSINE_KM}"),
        )),
    }
}

fn haversine_args() -> Vec<HostValue> {
    HAVERSINE_ARGS.iter().map(|&x| HostValue::Float(x)).collect()
}

/// Checks each implementation against the known distance before timing.
fn haversine_gate(b: &mut Bridge, direction: Direction) -> Result<()> {
    let km = match direction {
        Direction::LogicOnly => {
            let args: Vec<Term> = HAVERSINE_ARGS
                .iter()
                .map(|&x| Term::Float(x))
                .chain([Term::var(0)])
                .collect();
            let answers = b.solve(MODULE, &Term::compound_str("hav", args))?;
            match answers.first().and_then(|a| a.goal.args().last().cloned()) {
                Some(Term::Float(x)) => Some(x),
                _ => None,
            }
        }
        Direction::HostOnly | Direction::LogicToHost => b
            .call_host("math", "haversine", haversine_args(), no_kwargs())?
            .as_f64(),
        Direction::HostToLogic => b.jns_qdet(MODULE, "hav", &haversine_args())?.0.as_f64(),
    };
    check_km(km, direction)
}

pub fn bench_haversine(direction: Direction, iters: u64) -> Result<BenchResult> {
    check_iters(iters)?;
    let mut gated = false;
    run("haversine", direction, iters, |b, n| {
        if !gated {
            haversine_gate(b, direction)?;
            gated = true;
        }
        match direction {
            Direction::LogicOnly => logic_loop(b, "havloop", n),
            Direction::LogicToHost => logic_loop(b, "hhavloop", n),
            Direction::HostOnly => {
                for _ in 0..n {
                    black_box(b.call_host("math", "haversine", haversine_args(), no_kwargs())?);
                }
                Ok(())
            }
            Direction::HostToLogic => {
                let args = haversine_args();
                for _ in 0..n {
                    black_box(b.jns_qdet(MODULE, "hav", &args)?);
                }
                Ok(())
            }
        }
    })
}

pub fn bench_list_comp(direction: Direction, iters: u64) -> Result<BenchResult> {
    check_iters(iters)?;
    run("list_comp", direction, iters, |b, n| match direction {
        Direction::LogicOnly => logic_loop(b, "lcloop", n),
        Direction::LogicToHost => logic_loop(b, "hlcloop", n),
        Direction::HostOnly => {
            for _ in 0..n {
                let v: Vec<HostValue> = (1..=20).map(|i| HostValue::Int(black_box(i))).collect();
                black_box(HostValue::Sequence(v));
            }
            Ok(())
        }
        Direction::HostToLogic => {
            for _ in 0..n {
                let HostValue::Sequence(items) = b.jns_comp(MODULE, "item", &[], QueryFlags::default())? else {
                    return Err(bench_error(ErrorKind::TypeError, "comprehension did not return a list"));
                };
                if items.len() != 20 {
                    return Err(bench_error(
                        ErrorKind::SizeMismatch,
                        format!("{} answers, expected 20", items.len()),
                    ));
                }
            }
            Ok(())
        }
    })
}

/// The term image of a structure holding `elements`. Sets must not contain
/// duplicates, and tuples are limited to [`TUPLE_CAP`] elements.
pub fn transfer_term(shape: Shape, elements: &[i64]) -> Result<Term> {
    let ints = || elements.iter().map(|&i| Term::Int(i));
    Ok(match shape {
        Shape::List => Term::list(ints().collect::<Vec<_>>()),
        Shape::Tuple => {
            if elements.len() > TUPLE_CAP {
                return Err(bench_error(
                    ErrorKind::LimitError,
                    format!(
                        "tuples are benchmarked up to {TUPLE_CAP} elements, got {}",
                        elements.len()
                    ),
                ));
            }
            match elements.len() {
                0 => Term::atom(""),
                _ => Term::compound_str("", ints().collect()),
            }
        }
        Shape::Set => {
            let mut sorted = elements.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != elements.len() {
                return Err(bench_error(
                    ErrorKind::SizeMismatch,
                    format!("{} elements collapse to a set of {}", elements.len(), sorted.len()),
                ));
            }
            Term::compound_str("pySet", vec![Term::list(ints().collect::<Vec<_>>())])
        }
        Shape::Map => {
            let pairs: Vec<Term> = ints().map(|i| Term::compound_str("", vec![i.clone(), i])).collect();
            Term::compound_str("pyDict", vec![Term::list(pairs)])
        }
    })
}

fn element_count(t: &Term) -> usize {
    match t.functor() {
        Some((f, 1)) if matches!(f.as_str(), "pySet" | "pyDict") => {
            t.args()[0].list_items().map(|items| items.len()).unwrap_or(0)
        }
        Some((f, n)) if f.as_str().is_empty() => n,
        _ => t.list_items().map(|items| items.len()).unwrap_or(0),
    }
}

pub fn bench_transfer(shape: Shape, size: usize, iters: u64) -> Result<BenchResult> {
    bench_transfer_elements(shape, &(0..size as i64).collect::<Vec<_>>(), iters)
}

/// Round-trips the structure through the host identity function from a
/// logic goal, once per iteration.
pub fn bench_transfer_elements(shape: Shape, elements: &[i64], iters: u64) -> Result<BenchResult> {
    let data = transfer_term(shape, elements)?;
    let size = elements.len();
    let goal = Term::compound_str(
        "pyfunc",
        vec![
            Term::atom("jns_demo"),
            Term::compound_str("bitranslate", vec![data]),
            Term::var(0),
        ],
    );
    let name = format!("{}_{size}", shape.name());
    let mut checked = false;
    let r = run(&name, Direction::LogicToHost, iters.max(1), |b, n| {
        for _ in 0..n {
            let answers = b.solve(MODULE, &goal)?;
            if !checked {
                let back = answers.first().and_then(|a| a.goal.args().last().cloned());
                let got = back.as_ref().map(element_count).unwrap_or(0);
                if got != size {
                    return Err(bench_error(
                        ErrorKind::SizeMismatch,
                        format!("{name}: sent {size} elements, got {got} back"),
                    ));
                }
                checked = true;
            }
            black_box(answers);
        }
        Ok(())
    })?;
    Ok(r.with_elements(size))
}

pub const BENCH_NAMES: [&str; 4] = ["simple_loop", "haversine", "list_comp", "transfer"];

pub const TRANSFER_SIZES: [usize; 6] = [10, 100, 1_000, 10_000, 100_000, 1_000_000];

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub loop_iters: u64,
    pub haversine_iters: u64,
    pub list_comp_iters: u64,
    pub transfer_sizes: Vec<usize>,
    /// Elements moved per timed run; iterations are this divided by size.
    pub transfer_elements: u64,
}

impl SuiteConfig {
    /// Small counts for smoke runs.
    pub fn quick() -> SuiteConfig {
        SuiteConfig {
            loop_iters: MIN_ITERS,
            haversine_iters: MIN_ITERS,
            list_comp_iters: MIN_ITERS,
            transfer_sizes: vec![10, 100, 1_000, 10_000],
            transfer_elements: 100_000,
        }
    }
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            loop_iters: 1_000_000,
            haversine_iters: 100_000,
            list_comp_iters: 100_000,
            transfer_sizes: TRANSFER_SIZES.to_vec(),
            transfer_elements: 1_000_000,
        }
    }
}

fn unknown(selector: &str) -> BridgeError {
    bench_error(
        ErrorKind::ExistenceError,
        format!("unknown benchmark '{selector}'; known: {}", BENCH_NAMES.join(", ")),
    )
}

/// Checks a selector without running anything. A selector is a benchmark
/// name, optionally followed by `:DIRECTION`, or for `transfer`, `:SHAPE`.
pub fn validate_selector(selector: &str) -> Result<()> {
    let (name, qualifier) = match selector.split_once(':') {
        Some((n, q)) => (n, Some(q)),
        None => (selector, None),
    };
    let ok = match (name, qualifier) {
        (n, None) => BENCH_NAMES.contains(&n),
        ("transfer", Some(q)) => Shape::parse(q).is_some(),
        (n, Some(q)) => BENCH_NAMES.contains(&n) && Direction::parse(q).is_some(),
    };
    if ok {
        Ok(())
    } else {
        Err(unknown(selector))
    }
}

/// Runs the benchmarks a selector names: every direction (or for
/// `transfer`, every shape and size within the tuple cap) unless the
/// selector narrows it.
pub fn run_selector(selector: &str, cfg: &SuiteConfig) -> Result<Vec<BenchResult>> {
    validate_selector(selector)?;
    let (name, qualifier) = match selector.split_once(':') {
        Some((n, q)) => (n, Some(q)),
        None => (selector, None),
    };
    if name == "transfer" {
        let shapes = match qualifier.and_then(Shape::parse) {
            Some(s) => vec![s],
            None => Shape::ALL.to_vec(),
        };
        let mut out = Vec::new();
        for shape in shapes {
            for &size in &cfg.transfer_sizes {
                if shape == Shape::Tuple && size > TUPLE_CAP {
                    continue;
                }
                let iters = (cfg.transfer_elements / size.max(1) as u64).max(1);
                out.push(bench_transfer(shape, size, iters)?);
            }
        }
        return Ok(out);
    }
    let (f, iters): (fn(Direction, u64) -> Result<BenchResult>, u64) = match name {
        "simple_loop" => (bench_simple_loop, cfg.loop_iters),
        "haversine" => (bench_haversine, cfg.haversine_iters),
        "list_comp" => (bench_list_comp, cfg.list_comp_iters),
        _ => return Err(unknown(selector)),
    };
    let directions = match qualifier.and_then(Direction::parse) {
        Some(d) => vec![d],
        None => Direction::ALL.to_vec(),
    };
    directions.into_iter().map(|d| f(d, iters)).collect()
}

#[cfg(test)]
mod tests;
