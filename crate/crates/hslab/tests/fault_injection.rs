//! The χ⁺ sign-flip hook is process global, so this binary holds a single test.

use hslab::cli::{run, EXIT_OK, EXIT_TOLERANCE};
use hslab::verify::run_suite;

#[test]
fn chi_plus_flip_is_caught_by_name() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(["hslab", "--inject-chi-flip", "verify", "--suite", "calculus"], &mut out, &mut err);
    assert_eq!(code, EXIT_TOLERANCE);
    let rep: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let failed: Vec<&str> = rep["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"chi_plus_plus_chi_minus_equals_projector_identity_b"), "{failed:?}");

    // the hook is cleared afterwards
    assert!(!hslab::calculus::chi_plus_fault());
    assert!(run_suite("calculus", 42).unwrap().passed);
    let code = run(["hslab", "verify", "--suite", "holo"], &mut Vec::new(), &mut Vec::new());
    assert_eq!(code, EXIT_OK);
}
