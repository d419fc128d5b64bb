//! Command-surface tests: exit codes, formats, and failure paths, driven
//! through the built binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn ccs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ccs"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn run_prints_a_scenario_row() {
    let out = run(ccs().arg("run").arg(scenario("scenario_a.yaml")));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("scenario-a-planning"));
    assert!(text.contains("savings"));
}

#[test]
fn run_formats_agree_on_values() {
    let md = run(ccs().arg("run").arg(scenario("scenario_b.yaml")).args(["--format", "md"]));
    let csv = run(ccs().arg("run").arg(scenario("scenario_b.yaml")).args(["--format", "csv"]));
    let json = run(ccs().arg("run").arg(scenario("scenario_b.yaml")).args(["--format", "json"]));
    let md = String::from_utf8(md.stdout).unwrap();
    let csv = String::from_utf8(csv.stdout).unwrap();
    let json = String::from_utf8(json.stdout).unwrap();
    // Pull the savings cell out of the CSV row and find it verbatim in the
    // other renderings.
    let row = csv.lines().nth(1).unwrap();
    let savings = row.split(',').nth(4).unwrap().trim_matches('"');
    assert!(savings.contains('%'));
    assert!(md.contains(savings));
    assert!(json.contains(savings));
}

#[test]
fn missing_scenario_is_a_usage_error() {
    let out = run(ccs().arg("run").arg("/nonexistent/file.yaml"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.yaml");
    std::fs::write(&path, "name: x\nn: 4\nm: 3\n").unwrap();
    let out = run(ccs().arg("run").arg(&path));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("missing field"), "{err}");
}

#[test]
fn bounds_reports_reference_values() {
    let out = run(ccs().args(["bounds", "--n", "5", "--s", "50", "--v", "0.0"]));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("3072000 tokens"), "{text}");
}

#[test]
fn check_correct_mode_exits_zero() {
    let out = run(ccs().arg("check"));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("violations      | 0"), "{text}");
}

#[test]
fn check_broken_mode_exits_nonzero_with_trace() {
    let out = run(ccs().args(["check", "--broken-upgrade"]));
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("SingleWriter"), "{text}");
    assert!(text.contains("Upgrade(a"), "{text}");
}

#[test]
fn sweep_runs_with_hold_w() {
    let out = run(ccs()
        .arg("sweep")
        .arg(scenario("scenario_a.yaml"))
        .args(["--param", "s", "--values", "5,10", "--hold-w", "2"]));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("formula_lb"));
    assert!(text.contains("0% (bound<0)"), "{text}");
}

#[test]
fn reproduce_with_starved_checker_bounds_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(ccs()
        .arg("reproduce")
        .arg("--out")
        .arg(dir.path())
        .args(["--checker-version-bound", "1", "--checker-step-bound", "1"]));
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("FAIL"), "{text}");
    assert!(text.contains("criterion 12"), "{text}");
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    // The starved checker keeps this invocation from being another full
    // reproduction; we only care where the files land.
    let out = run(ccs()
        .env("CCS_OUT_DIR", dir.path())
        .arg("reproduce")
        .args(["--checker-version-bound", "1", "--checker-step-bound", "1"]));
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("summary.json").exists());
}
