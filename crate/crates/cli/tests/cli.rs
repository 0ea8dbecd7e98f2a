//! End-to-end runs of the `dmera` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dmera(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmera")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column<'a>(csv: &'a str, name: &str) -> Vec<&'a str> {
    let mut lines = csv.lines();
    let i = lines.next().unwrap().split(',').position(|h| h == name).expect("column present");
    lines.map(|l| l.split(',').nth(i).unwrap()).collect()
}

#[test]
fn exit_codes_separate_usage_from_failures() {
    assert_eq!(dmera(&["evaluate", "--depth", "7"]).status.code(), Some(2));
    assert_eq!(dmera(&["evaluate", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(dmera(&["reproduce-figure", "9z"]).status.code(), Some(2));
    assert_eq!(dmera(&["reproduce-figure", "2a", "--svg"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("no/such/dir.csv");
    let out = dmera(&["evaluate", "--depth", "1", "--sites", "16", "--out", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluate_writes_full_precision_rows() {
    let csv = stdout(&dmera(&["evaluate", "--depth", "1,6", "--sites", "16"]));
    assert_eq!(csv.lines().next().unwrap(), "model,D,L,energy_density,energy_rel_error,normalized_infidelity");
    assert_eq!(csv.lines().count(), 3);
    for v in column(&csv, "energy_rel_error") {
        let digits = v.split('e').next().unwrap().chars().filter(char::is_ascii_digit).count();
        assert_eq!(digits, 17, "{v}");
    }
    let errs: Vec<f64> = column(&csv, "energy_rel_error").iter().map(|v| v.parse().unwrap()).collect();
    assert!(errs[0] > 3e-2 && errs[1] < 1e-8, "{errs:?}");
}

#[test]
fn zero_parameters_prepare_the_vacuum() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("zero.json");
    fs::write(&p, r#"{"model": "ising", "D": 2, "theta": [0, 0, 0, 0]}"#).unwrap();
    let csv = stdout(&dmera(&["evaluate", "--params", p.to_str().unwrap(), "--sites", "16"]));
    let e: f64 = column(&csv, "energy_density")[0].parse().unwrap();
    let err: f64 = column(&csv, "energy_rel_error")[0].parse().unwrap();
    assert_eq!(e, -1.0);
    assert!((err - (1.0 - std::f64::consts::FRAC_PI_4)).abs() < 1e-15);

    fs::write(&p, r#"{"model": "ising", "D": 2, "theta": [0, 0, 0]}"#).unwrap();
    assert_eq!(dmera(&["evaluate", "--params", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn same_seed_same_output() {
    let run = || stdout(&dmera(&["qaoa", "--rounds", "1..2", "--sites", "16", "--seed", "4"]));
    let a = run();
    assert_eq!(a, run());
    assert_eq!(a.lines().next().unwrap(), "p,L,energy_density,energy_rel_error,normalized_infidelity");
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn config_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"depth": "2,3", "sites": 32}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let from_cfg = stdout(&dmera(&["--config", c, "evaluate"]));
    assert_eq!(column(&from_cfg, "D"), ["2", "3"]);
    assert_eq!(column(&from_cfg, "L"), ["32", "32"]);
    let overridden = stdout(&dmera(&["--config", c, "evaluate", "--depth", "4"]));
    assert_eq!(column(&overridden, "D"), ["4"]);
    assert_eq!(column(&overridden, "L"), ["32"]);

    fs::write(&cfg, r#"{"depth": 2, "colour": "blue"}"#).unwrap();
    assert_eq!(dmera(&["--config", c, "evaluate"]).status.code(), Some(2));
}

#[test]
fn optimize_writes_loadable_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let (params, log) = (dir.path().join("d1.json"), dir.path().join("d1.jsonl"));
    let out = dmera(&[
        "optimize",
        "--depth",
        "1",
        "--restarts",
        "2",
        "--out",
        params.to_str().unwrap(),
        "--log",
        log.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(&log).unwrap().lines().count() > 1);
    let csv = stdout(&dmera(&["evaluate", "--params", params.to_str().unwrap(), "--sites", "16"]));
    let err: f64 = column(&csv, "energy_rel_error")[0].parse().unwrap();
    assert!((err - 3.893e-2).abs() < 1e-4, "{err}");
}

#[test]
fn cheap_figures_write_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2a.csv");
    let o = dmera(&["reproduce-figure", "2a", "--depth", "1..3", "--out", out.to_str().unwrap(), "--svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "model,D,energy_density,energy_rel_error");
    assert_eq!(csv.lines().count(), 7);
    let svg = fs::read_to_string(Path::new(&out).with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));

    let csv = stdout(&dmera(&["reproduce-figure", "6a", "--rounds", "2"]));
    assert_eq!(column(&csv, "p"), ["2"]);
}
