use hslab::calculus::CoefficientMatrix;
use hslab::cli::{run, EXIT_OK, EXIT_PRECONDITION, EXIT_TOLERANCE, EXIT_USAGE};
use hslab::grid::{random_boundary, BoundarySpec};
use hslab::io;
use std::path::Path;

fn hslab(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("hslab").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn imax_csv_has_the_four_corners() {
    let (code, out, _) = hslab(&["regions", "--imax", "--n", "1"]);
    assert_eq!(code, EXIT_OK);
    let mut lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.remove(0), "j,theta,polygon_id,open");
    let mut pts: Vec<(f64, f64)> = lines
        .iter()
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].parse().unwrap(), c[1].parse().unwrap())
        })
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(pts, vec![(-1.0, -1.0), (0.0, 0.0), (1.0, -1.0), (2.0, 0.0)]);
}

#[test]
fn unknown_command_is_a_usage_error() {
    let (code, _, err) = hslab(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("Usage"));
    assert_eq!(hslab(&[]).0, EXIT_USAGE);
}

#[test]
fn help_exits_cleanly() {
    let (code, out, _) = hslab(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("verify"));
}

#[test]
fn verify_reports_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let (code, ..) = hslab(&["verify", "--suite", "exponents", "--seed", "42", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
    }
    let ra = std::fs::read(a.path().join("verify-exponents.json")).unwrap();
    let rb = std::fs::read(b.path().join("verify-exponents.json")).unwrap();
    assert_eq!(ra, rb);
    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| !c["anchor"].as_str().unwrap().is_empty()));
}

#[test]
fn unknown_suite_is_a_precondition_failure() {
    assert_eq!(hslab(&["verify", "--suite", "nope"]).0, EXIT_PRECONDITION);
}

#[test]
fn missing_input_is_a_precondition_failure() {
    assert_eq!(hslab(&["norm", "--field", "/definitely/not/here.hsf"]).0, EXIT_PRECONDITION);
}

#[test]
fn config_supplies_command_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 7, "command": ["verify", "--suite", "regions"]}"#).unwrap();
    let (code, out, _) = hslab(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["seed"], 7);
    assert_eq!(v["suite"], "regions");
}

#[test]
fn norm_accepts_negative_regularity() {
    let (code, out, _) = hslab(&["norm", "--kind", "z", "--p", "2", "--s", "-0.5", "--nx", "32", "--levels", "16"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["value"].as_f64().unwrap() > 0.0);
}

fn write_problem(dir: &Path, problem: &str, channels: usize) -> std::path::PathBuf {
    let a = CoefficientMatrix::random_accretive(1, 1, 3, 0.5);
    io::write_coefficients(&dir.join("a.json"), &a).unwrap();
    let g = random_boundary(&BoundarySpec { n: 1, l: 2.0 * std::f64::consts::PI, nx: 16 }, channels, 9);
    io::write_boundary(&dir.join("datum.hsf"), &g, 1).unwrap();
    let p = dir.join("problem.json");
    let text = format!(
        r#"{{"coefficients": "a.json", "grid": {{"n": 1, "m": 1, "L": {}, "Nx": 16, "t_min": 0.01, "t_max": 4.0, "K": 12}},
            "problem": "{problem}", "exponent": {{"j": 0.5, "theta": -0.5}}, "datum": "datum.hsf"}}"#,
        2.0 * std::f64::consts::PI
    );
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn solve_writes_solution_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(dir.path(), "neumann", 1);
    let out = dir.path().join("out");
    let (code, _, err) = hslab(&["solve", "--problem", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    let field = io::read_hsf(&out.join("solution.hsf")).unwrap().into_field().unwrap();
    assert_eq!(field.spec().k, 12);
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("solve.json")).unwrap()).unwrap();
    assert!(rep["report"]["boundary_residual"].as_f64().unwrap() < 1e-10);
    assert!(rep["report"]["min_singular"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_rejects_wrong_channel_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_problem(dir.path(), "neumann", 2);
    assert_eq!(hslab(&["solve", "--problem", p.to_str().unwrap()]).0, EXIT_PRECONDITION);
}

#[test]
fn calc_and_layer_run_on_random_input() {
    let (code, out, _) = hslab(&["calc", "--fn", "scale(2,bump(1,0))", "--random", "--nx", "16"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("\"output_l2\""));
    let (code, out, _) = hslab(&["layer", "--kind", "single", "--t", "-0.3", "--random", "--nx", "16"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["jumps"]["single"].as_f64().unwrap() < 1e-10);
    assert_eq!(hslab(&["calc", "--fn", "wobble(3)"]).0, EXIT_PRECONDITION);
}

#[test]
fn probes_report() {
    let (code, out, _) = hslab(&["probe", "--kind", "wp", "--component", "par", "--nx", "16"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((v["min_singular"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    let (code, out, _) = hslab(&["probe", "--kind", "perturb", "--random", "--nx", "16", "--delta", "1e-3"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["ratio"].as_f64().unwrap().is_finite());
}

#[test]
fn atoms_write_coefficients_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (code, ..) = hslab(&["atoms", "--p", "1", "--s", "-0.5", "--nx", "32", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(dir.path().join("atoms.csv").exists());
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("atoms.json")).unwrap()).unwrap();
    assert!(v["reconstruction_error"].as_f64().unwrap() < 1e-13);
}

#[test]
fn exit_code_constants() {
    assert_eq!((EXIT_PRECONDITION, EXIT_TOLERANCE, EXIT_USAGE), (2, 3, 64));
}
