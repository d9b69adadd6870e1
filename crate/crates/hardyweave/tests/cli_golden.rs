//! Black-box tests of the installed binary: exit codes, output formats,
//! and determinism.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardyweave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn hardy_circ() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/circuits/hardy.circ")
}

#[test]
fn defaults_succeed_with_expected_table() {
    let out = run(&["hardy"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("d_S d_I    0.083333333"), "{text}");
    assert!(text.contains("paradox verdict: true"));
}

#[test]
fn zero_pump_hits_the_physics_gate() {
    let out = run(&["hardy", "--gamma", "0+0i"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn json_record_carries_schema_version() {
    let out = run(&["hardy", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["schema_version"], "1");
    assert_eq!(record["command"], "hardy");
    assert_eq!(record["inputs"]["alpha"]["re"].as_f64(), Some(0.01));
    let dd = record["results"]["probabilities"]["dd"].as_f64().unwrap();
    assert!((dd - 1.0 / 12.0).abs() < 1e-9);
}

#[test]
fn json_output_is_deterministic() {
    let a = run(&["hardy", "--format", "json"]);
    let b = run(&["hardy", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn run_matches_hardy_on_bundled_circuit() {
    let out = run(&["run", hardy_circ(), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let probs = &record["results"]["probabilities"];
    assert!((probs["c_S c_I"].as_f64().unwrap() - 0.75).abs() < 1e-9);
    assert!((probs["d_S d_I"].as_f64().unwrap() - 1.0 / 12.0).abs() < 1e-9);
}

#[test]
fn run_emit_stages_lists_pipeline_stages() {
    let out = run(&["run", hardy_circ(), "--emit-stages"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("prepared:"));
    assert!(text.contains("pair_interference:"));
}

#[test]
fn syntax_error_reports_line_and_column() {
    let dir = std::env::temp_dir();
    let path = dir.join("hardyweave_bad_test.circ");
    std::fs::write(&path, "mode a\nzap a\n").unwrap();
    let out = run(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("2:1"), "{err}");
    std::fs::remove_file(&path).ok();
}

#[test]
fn missing_file_is_a_usage_error() {
    let out = run(&["run", "/nonexistent/nowhere.circ"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn scan_rejects_degenerate_grid() {
    let out = run(&["scan", "--steps", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn scan_csv_has_stable_columns_and_constant_p_dd() {
    let out = run(&["scan", "--satisfy-condition5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,ratio_triple,ratio_two_pair,p_dd"));
    for line in lines {
        let p_dd: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!((p_dd - 1.0 / 12.0).abs() < 1e-9, "{line}");
    }
}

#[test]
fn scan_json_reports_power_law_slopes() {
    let out = run(&["scan", "--satisfy-condition5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let s1 = record["results"]["slope_triple"].as_f64().unwrap();
    let s2 = record["results"]["slope_two_pair"].as_f64().unwrap();
    assert!((s1 - 1.0).abs() < 0.01, "{s1}");
    assert!((s2 - 2.0).abs() < 0.02, "{s2}");
}

#[test]
fn unknown_flag_exits_one_and_help_exits_zero() {
    assert_eq!(run(&["hardy", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
