use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use armopt::io::{scenario_to_json, SUMMARY_HEADER, TRACE_HEADER};
use armopt::scenarios::builtin_scenarios;

fn armopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_armopt"))
        .args(args)
        .env("ARMOPT_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

// a few cheap iterations keep these runs short
const QUICK: [&str; 4] = ["--set", "outer_max_iters=2", "--set", "inner_max_iters=3"];

fn optimize_quick(scenario: &str, out: &Path) -> Output {
    let mut args = vec!["optimize", "--scenario", scenario, "--out", out.to_str().unwrap()];
    args.extend(QUICK);
    armopt(&args)
}

#[test]
fn optimize_all_writes_rows_in_catalog_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = optimize_quick("all", dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], SUMMARY_HEADER);
    let names: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["no-obstacles", "static-obstacles", "moving-obstacles"]);
    assert!(summary.ends_with('\n') && !summary.contains('\r'));
    for name in names {
        for file in ["trace_before.csv", "trace_after.csv"] {
            let trace = fs::read_to_string(dir.path().join(name).join(file)).unwrap();
            assert_eq!(trace.lines().count(), 3002);
        }
    }
}

#[test]
fn repeated_optimize_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(optimize_quick("no-obstacles", a.path()).status.success());
    assert!(optimize_quick("no-obstacles", b.path()).status.success());
    for file in ["summary.csv", "no-obstacles/trace_before.csv", "no-obstacles/trace_after.csv"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn simulate_writes_the_baseline_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = armopt(&["simulate", "--scenario", "static-obstacles", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let trace = fs::read_to_string(dir.path().join("static-obstacles/trace_before.csv")).unwrap();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], TRACE_HEADER);
    assert_eq!(lines.len() - 1, 3001);
    assert!(lines[1].starts_with("0.00000,"));
    assert!(lines[3001].starts_with("30.0000,"));
    assert!(!dir.path().join("static-obstacles/trace_after.csv").exists());
}

#[test]
fn unreachable_target_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = builtin_scenarios()[0].clone();
    s.goal.point = [5.0, 0.0];
    let path = dir.path().join("bad.json");
    fs::write(&path, scenario_to_json(&s)).unwrap();
    let selector = format!("file:{}", path.display());
    let out = armopt(&["validate", "--scenario", &selector]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("reach constraint"), "{}", stderr(&out));
}

#[test]
fn catalog_validates() {
    let out = armopt(&["validate", "--scenario", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 3);
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut value = serde_json::to_value(&builtin_scenarios()[0]).unwrap();
    value["arm"].as_object_mut().unwrap().remove("link_lengths");
    let path = dir.path().join("missing.json");
    fs::write(&path, value.to_string()).unwrap();
    let selector = format!("file:{}", path.display());
    for cmd in ["validate", "simulate", "optimize"] {
        let out = armopt(&[cmd, "--scenario", &selector, "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{cmd}");
        assert!(stderr(&out).contains("arm.link_lengths"), "{}", stderr(&out));
    }
}

#[test]
fn unknown_override_keys_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let out = armopt(&[
        "optimize", "--scenario", "no-obstacles", "--out", dir.path().to_str().unwrap(),
        "--set", "outer_max_iter=3", "--set", "speed=fast",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("outer_max_iter") && err.contains("speed"), "{err}");
    assert!(!dir.path().join("summary.csv").exists());
}

#[test]
fn unknown_scenario_is_rejected() {
    let out = armopt(&["simulate", "--scenario", "sideways"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sideways"));
}
