use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvprobe"))
        .args(args)
        .env("CURVPROBE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, contents: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check named {name}"))
}

#[test]
fn verify_passes_and_is_byte_stable() {
    let a = run(&["verify", "--n", "3"]);
    let b = run(&["verify", "--n", "3"]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stdout)
    );
    assert_eq!(a.stdout, b.stdout);
    let r = json(&a);
    assert_eq!(r["status"], "pass");
    assert_eq!(r["command"], "verify");
    assert_eq!(r["results"]["probe"]["diag_sign"], "all-negative");
    for name in [
        "star_condition",
        "offdiag_zero",
        "certificate_flat",
        "certificate_evolving",
        "flow_consistency",
    ] {
        assert_eq!(check(&r, name)["passed"], true, "{name}");
    }
}

#[test]
fn verify_two_dimensions_skips_pairwise_test() {
    let out = run(&["verify", "--n", "2", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| !c["name"].as_str().unwrap().starts_with("pairwise")));
}

#[test]
fn text_output_ends_with_status() {
    let out = run(&["verify", "--n", "3", "--text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[ok  ] star_condition"));
    assert!(text.ends_with("status: pass\n"));
}

#[test]
fn out_of_range_dimension_is_a_usage_error() {
    for n in ["1", "9", "x"] {
        assert_eq!(run(&["verify", "--n", n]).status.code(), Some(2), "n = {n}");
    }
}

#[test]
fn star_reports_violations_for_the_ones_matrix() {
    let out = run(&["star", "--matrix", data("ones3.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r = json(&out);
    assert_eq!(r["status"], "fail");
    assert_eq!(r["results"]["violations"].as_array().unwrap().len(), 6);
}

#[test]
fn dtrm_lists_the_diagonal_entries() {
    let out = run(&[
        "dtrm",
        "--matrix",
        data("lower_ones3.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for v in ["\"-24/1\"", "\"-16/1\""] {
        assert!(stdout.contains(v), "{v} missing");
    }
}

#[test]
fn curvature_of_the_paraboloid() {
    let out = run(&[
        "curvature",
        "--f",
        data("paraboloid2.json").to_str().unwrap(),
        "--at",
        "0,1/2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("16/25"));
    let mismatch = run(&[
        "curvature",
        "--f",
        data("paraboloid2.json").to_str().unwrap(),
        "--at",
        "0,1/2",
        "--n",
        "3",
    ]);
    assert_eq!(mismatch.status.code(), Some(2));
    let short = run(&[
        "curvature",
        "--f",
        data("paraboloid2.json").to_str().unwrap(),
        "--at",
        "0",
    ]);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn gauss_solve_separates_feasible_from_infeasible() {
    let ok = run(&[
        "gauss-solve",
        "--target",
        data("saddle_target2.json").to_str().unwrap(),
    ]);
    assert_eq!(ok.status.code(), Some(0));
    let bad = run(&[
        "gauss-solve",
        "--target",
        data("negative_target3.json").to_str().unwrap(),
        "--restarts",
        "5",
    ]);
    assert_eq!(bad.status.code(), Some(1));
    let again = run(&[
        "gauss-solve",
        "--target",
        data("negative_target3.json").to_str().unwrap(),
        "--restarts",
        "5",
    ]);
    assert_eq!(bad.stdout, again.stdout);
}

#[test]
fn malformed_inputs_exit_two_with_a_field_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_temp(
        &dir,
        "m.json",
        r#"{"n": 2, "a": [["1","0"],["0","1"]], "extra": 1}"#,
    );
    let out = run(&["dtrm", "--matrix", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    let r = json(&out);
    assert_eq!(r["status"], "error");
    assert!(r["error"].as_str().unwrap().contains("extra"));

    let ragged = write_temp(&dir, "r.json", r#"{"n": 2, "a": [["1","0"],["0"]]}"#);
    assert_eq!(run(&["star", "--matrix", &ragged]).status.code(), Some(2));

    let bad_idx = write_temp(
        &dir,
        "t.json",
        r#"{"n": 2, "entries": [{"idx": [1, 3, 2, 1], "val": 1.0}]}"#,
    );
    let out = run(&["gauss-solve", "--target", &bad_idx]);
    assert_eq!(out.status.code(), Some(2));
    assert!(json(&out)["error"]
        .as_str()
        .unwrap()
        .contains("entries[0].idx"));

    let missing = dir.path().join("absent.json");
    assert_eq!(
        run(&["dtrm", "--matrix", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn flow_arguments_are_validated() {
    assert_eq!(
        run(&["flowcheck", "--n", "3", "--dt", "1e-3,2e-3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["flowcheck", "--n", "3", "--dt", "1e-3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["flowcheck", "--n", "3", "--h", "-1"]).status.code(),
        Some(2)
    );
}
