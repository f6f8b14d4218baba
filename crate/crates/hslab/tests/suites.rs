use hslab::verify::{run_suite, SUITES};

#[test]
fn every_suite_passes_at_default_seed() {
    for name in SUITES {
        let rep = run_suite(name, 42).unwrap();
        let failed: Vec<String> = rep.checks.iter().filter(|c| !c.passed).map(|c| format!("{} = {:.3e}", c.name, c.value)).collect();
        assert!(rep.passed && failed.is_empty(), "{name}: {failed:?}");
    }
}

#[test]
fn other_seed_still_passes_cheap_suites() {
    for name in ["exponents", "regions", "holo", "bvp"] {
        let rep = run_suite(name, 7).unwrap();
        assert!(rep.passed, "{name}: {:?}", rep.checks.iter().filter(|c| !c.passed).map(|c| &c.name).collect::<Vec<_>>());
    }
}
