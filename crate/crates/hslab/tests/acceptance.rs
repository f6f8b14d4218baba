//! Acceptance criteria, one pass/fail line each.

use hslab::verify::{criterion, run_all, Check};
use std::time::{Duration, Instant};

const SEED: u64 = 42;

fn report(i: usize, checks: &[Check], elapsed: Duration, budget: Option<Duration>) -> bool {
    let fast = budget.map_or(true, |b| elapsed <= b);
    let ok = fast && !checks.is_empty() && checks.iter().all(|c| c.passed);
    for c in checks.iter().filter(|c| !c.passed) {
        println!("    failed {}: {} vs {} ({})", c.name, c.value, c.tolerance, c.relation);
    }
    let time = match budget {
        Some(b) => format!(" [{:.2}s, budget {}s]", elapsed.as_secs_f64(), b.as_secs()),
        None => format!(" [{:.2}s]", elapsed.as_secs_f64()),
    };
    println!("criterion {i:2}: {}{time}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn budget(i: usize) -> Option<Duration> {
    match i {
        1 => Some(Duration::from_secs(1)),
        3 => Some(Duration::from_secs(30)),
        5 => Some(Duration::from_secs(60)),
        _ => None,
    }
}

#[test]
fn acceptance() {
    hslab::init_threads();
    let mut failed = Vec::new();
    for i in 1..=11 {
        let start = Instant::now();
        let checks = criterion(i, SEED).unwrap_or_else(|e| panic!("criterion {i} errored: {e}"));
        if !report(i, &checks, start.elapsed(), budget(i)) {
            failed.push(i);
        }
    }
    let start = Instant::now();
    let a = serde_json::to_vec(&run_all(SEED).expect("first run")).unwrap();
    let b = serde_json::to_vec(&run_all(SEED).expect("second run")).unwrap();
    let elapsed = start.elapsed() / 2;
    let same = Check::flag("byte_identical_reports", "determinism", a == b);
    if !report(12, &[same], elapsed, Some(Duration::from_secs(300))) {
        failed.push(12);
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
