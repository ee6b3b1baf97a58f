use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn zrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zrp")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn gap_of_independent_particles() {
    let out = zrp(&["gap", "--dim", "1", "--side", "3", "--particles", "4", "--rates", "linear"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["schema"], 1);
    assert!((v["result"]["gap"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("seed 0") && err.contains("\"particles\":4"));
}

#[test]
fn side_zero_is_config_error() {
    let out = zrp(&["gap", "--side", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("side must be ≥ 2"));
}

#[test]
fn unknown_preset_and_bad_flags_are_config_errors() {
    assert_eq!(zrp(&["gap", "--rates", "quadratic"]).status.code(), Some(2));
    assert_eq!(zrp(&["gap", "--particles", "many"]).status.code(), Some(2));
    assert_eq!(zrp(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn numeric_failure_exit_code() {
    // a single size cannot be fitted
    let out = zrp(&["llt", "--mode", "scan", "--sizes", "16"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_on_every_subcommand() {
    for c in [
        "gap", "logsob", "ed", "sweep", "bd", "miclo", "llt", "econd", "dominate", "simulate", "decay", "colour-check", "couple",
    ] {
        assert_eq!(zrp(&[c, "--help"]).status.code(), Some(0), "{c}");
    }
    assert_eq!(zrp(&["--help"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_csv_and_gnuplot_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let out = zrp(&[
        "sweep", "--kind", "gap", "--sides", "2..8", "--rates", "linear", "--fit", "--format", "csv", "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("N,r,constant,log_constant"));
    assert_eq!(lines.count(), 7);
    let dat = fs::read_to_string(dir.path().join("sweep.dat")).unwrap();
    assert_eq!(dat.lines().count(), 8);

    let out = zrp(&["sweep", "--kind", "gap", "--sides", "2..8", "--rates", "linear", "--fit"]);
    let slope = json_of(&out)["result"]["slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 0.2, "{slope}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = zrp(&[
            "logsob", "--side", "3", "--particles", "2", "--rates", "staircase", "--restarts", "6", "--seed", "5", "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn rate_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("rates.txt");
    fs::write(&f, "sites = 3\n[all]\nhead = [0]\ntail_theta = 1\n").unwrap();
    let out = zrp(&["gap", "--side", "3", "--particles", "2", "--rates-file", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json_of(&out)["result"]["gap"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let out = zrp(&["gap", "--side", "4", "--rates-file", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = zrp(&["gap", "--side", "3", "--rates-file", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn csv_series_for_decay() {
    let out = zrp(&["decay", "--side", "2", "--particles", "2", "--replicas", "200", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,mean,var,n\n"));
}

#[test]
fn simulation_commands() {
    let out = zrp(&["colour-check", "--side", "2", "--particles", "3"]);
    assert_eq!(json_of(&out)["result"]["max_abs_err"].as_f64().unwrap(), 0.0);
    let out = zrp(&["couple", "--side", "3", "--particles", "3", "--rates", "staircase", "--seeds", "3"]);
    assert_eq!(json_of(&out)["result"]["all_preserved"], true);
    let out = zrp(&["simulate", "--dynamics", "two-colour", "--side", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn llt_table_header() {
    let out = zrp(&["llt", "--mode", "scan", "--rates", "staircase", "--sizes", "16,32", "--format", "csv"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("N,J,sup_err\n"));
}
