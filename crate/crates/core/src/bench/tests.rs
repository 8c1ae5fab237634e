use super::*;

fn fake(name: &str, direction: Direction, iters: u64, total_ns: u64, elements: Option<usize>) -> BenchResult {
    let r = BenchResult::new(name, direction, iters, total_ns);
    match elements {
        Some(n) => r.with_elements(n),
        None => r,
    }
}

#[test]
fn table_matches_golden() {
    let results = [
        fake("simple_loop", Direction::LogicOnly, 1_000_000, 30_000_000, None),
        fake("simple_loop", Direction::LogicToHost, 1_000_000, 1_980_000_000, None),
        fake("haversine", Direction::HostToLogic, 100_000, 8_100_000_000, None),
        fake("list_1000", Direction::LogicToHost, 1_000, 54_300_000, Some(1_000)),
    ];
    let report = emit_table(&results).unwrap();
    assert_eq!(report.csv, include_str!("golden/report.csv"));
    assert_eq!(report.table, include_str!("golden/report.txt"));
    assert_eq!(report.csv.lines().count(), 1 + results.len());
}

#[test]
fn empty_report_is_an_error() {
    assert_eq!(emit_table(&[]).unwrap_err().kind, ErrorKind::DomainError);
}

#[test]
fn per_op_is_total_over_iters() {
    let r = fake("x", Direction::HostOnly, 4, 10, Some(5));
    assert_eq!(r.per_op_ns, 2.5);
    assert_eq!(r.per_elt_ns, Some(0.5));
}

#[test]
fn small_iteration_counts_are_rejected() {
    assert_eq!(
        bench_simple_loop(Direction::LogicOnly, 10).unwrap_err().kind,
        ErrorKind::DomainError
    );
}

#[test]
fn every_direction_runs_without_leaks() {
    for d in Direction::ALL {
        for r in [
            bench_simple_loop(d, MIN_ITERS).unwrap(),
            bench_haversine(d, MIN_ITERS).unwrap(),
            bench_list_comp(d, MIN_ITERS).unwrap(),
        ] {
            assert_eq!(r.direction, d);
            assert_eq!(r.iters, MIN_ITERS);
            assert!(r.total_ns > 0);
            assert!(r.leak_free(), "{r:?}");
        }
    }
}

#[test]
fn transfer_shapes_and_guards() {
    for shape in Shape::ALL {
        let r = bench_transfer(shape, 100, 5).unwrap();
        assert_eq!(r.name, format!("{}_100", shape.name()));
        assert!(r.per_elt_ns.unwrap() > 0.0);
    }
    assert_eq!(
        bench_transfer(Shape::Tuple, 100_000, 1).unwrap_err().kind,
        ErrorKind::LimitError
    );
    assert_eq!(
        bench_transfer_elements(Shape::Set, &[1, 2, 2, 3], 1).unwrap_err().kind,
        ErrorKind::SizeMismatch
    );
    assert!(bench_transfer(Shape::Tuple, 0, 1).is_ok());
}

#[test]
fn unknown_names_are_rejected() {
    for bad in ["nope", "simple_loop:sideways", "transfer:logic-only", "haversine:list"] {
        assert_eq!(
            run_selector(bad, &SuiteConfig::quick()).unwrap_err().kind,
            ErrorKind::ExistenceError,
            "{bad}"
        );
    }
}

#[test]
fn selectors_narrow_the_run() {
    let rows = run_selector("simple_loop:host-to-logic", &SuiteConfig::quick()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].direction, Direction::HostToLogic);
    let cfg = SuiteConfig {
        transfer_sizes: vec![10, 100],
        ..SuiteConfig::quick()
    };
    let rows = run_selector("transfer:set", &cfg).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(),
        ["set_10", "set_100"]
    );
}
