use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use steklov::corpus::{default_space, default_time, entry_constant_on};
use steklov::field::{SpaceGrid, TimeGrid};
use steklov::io::{read_field, read_named_field, write_field};
use steklov::report::Report;

fn steklov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_report(path: &Path) -> Report {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// Report text with every timing value blanked.
fn without_timing(path: &Path) -> String {
    let mut v: Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    for r in v["results"].as_array_mut().unwrap() {
        r["runtime_ms"] = Value::Null;
    }
    serde_json::to_string(&v).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn average_of_constant_is_constant_on_ih() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("v.json");
    let output = dir.path().join("vh.json");
    let space = SpaceGrid::line(0.0, 1.0, 5).unwrap();
    let time = TimeGrid::spanning(0.0, 1.0, 9).unwrap();
    write_field(&entry_constant_on(2.5, space, time).unwrap().field, &input).unwrap();

    let out = steklov(&["average", "--in", p(&input), "--h", "0.25", "--out", p(&output)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let vh = read_field(&output).unwrap();
    assert_eq!(vh.n_time(), 7);
    assert_eq!(vh.time().end(), 0.75);
    assert!(vh.values().iter().all(|&v| v == 2.5));

    let out = steklov(&["average", "--in", p(&input), "--h", "0.25", "--extended", "--out", p(&output)]);
    assert_eq!(code(&out), 0);
    let ext = read_field(&output).unwrap();
    assert_eq!(ext.n_time(), 9);
    assert_eq!(ext.series(0)[6], 2.5);
    assert_eq!(ext.series(0)[7], 1.25);
    assert_eq!(ext.series(0)[8], 0.0);
}

#[test]
fn average_rejects_window_off_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("v.json");
    let time = TimeGrid::spanning(0.0, 1.0, 9).unwrap();
    write_field(&entry_constant_on(1.0, SpaceGrid::point(), time).unwrap().field, &input).unwrap();
    let out = steklov(&["average", "--in", p(&input), "--h", "0.3", "--out", p(&dir.path().join("o.json"))]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("multiple"));
    let out = steklov(&["average", "--in", p(&input), "--out", p(&dir.path().join("o.json"))]);
    assert_eq!(code(&out), 2, "missing --h");
}

#[test]
fn missing_input_is_io_error() {
    let out = steklov(&["average", "--in", "/nonexistent/v.json", "--h", "0.25", "--out", "/tmp/x.json"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn lemma_filter_runs_only_commutation() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = steklov(&["verify", "--lemma", "4.1", "--h", "0.125", "--report", p(&report)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r = read_report(&report);
    assert!(!r.results.is_empty());
    assert!(r.results.iter().all(|c| c.check_id == "lemma-4.1-commutation"));
    assert!(r.results.iter().all(|c| c.param("h") == Some(0.125)));
    assert!(r.studies.is_empty());
}

#[test]
fn csv_report_has_one_row_per_result() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    let args = ["verify", "--lemma", "4.2,cantor", "--seed", "3"];
    let out = steklov(&[&args[..], &["--format", "csv", "--report", p(&csv)]].concat());
    assert_eq!(code(&out), 0);
    steklov(&[&args[..], &["--report", p(&json)]].concat());
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(
        rows[0],
        "check_id,field_name,h,q,r,dt,measured,bound_or_target,margin,tolerance,passed,runtime_ms"
    );
    assert_eq!(rows.len(), read_report(&json).results.len() + 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    let report = dir.path().join("r.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"command": "verify", "lemma_ids": ["kernel"], "seed": 11, "report_path": "{}"}}"#,
            p(&report)
        ),
    )
    .unwrap();
    let out = steklov(&["--config", p(&config), "--seed", "12"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_report(&report);
    assert_eq!(r.seed, 12);
    assert!(r.results.iter().all(|c| c.check_id == "kernel-naive-equivalence"));
    assert_eq!(r.results[0].field_name, "noise_12");

    std::fs::write(&config, r#"{"command": "verify", "sead": 1}"#).unwrap();
    assert_eq!(code(&steklov(&["--config", p(&config)])), 2);
}

#[test]
fn verify_on_field_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("sin.json");
    let e = steklov::corpus::entry_sin_gauss_on(3.0, default_space(), default_time()).unwrap();
    steklov::io::write_named_field(&e.field, "sin3", &input).unwrap();
    let report = dir.path().join("r.json");
    let out = steklov(&["verify", "--in", p(&input), "--report", p(&report), "--jobs", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let r = read_report(&report);
    assert!(r.results.iter().all(|c| c.field_name == "sin3"));
    for id in ["lemma-2.4d-contraction", "lemma-4.1-commutation", "lemma-5.2-ftc-integral"] {
        assert!(r.results.iter().any(|c| c.check_id == id), "{id}");
    }
    // studies need analytic entries
    let out = steklov(&["verify", "--in", p(&input), "--lemma", "2.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_corpus_writes_readable_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = steklov(&["gen-corpus", "--out", p(dir.path()), "--dt", "0.0625"]);
    assert_eq!(code(&out), 0);
    let (name, field) = read_named_field(dir.path().join("step_0.5.json")).unwrap();
    assert_eq!(name, "step_0.5");
    assert_eq!(field.n_time(), 17);
    assert_eq!(field.value(0, 8), 1.0);
    assert_eq!(field.value(0, 7), 0.0);
    assert!(dir.path().join("sin_gauss_2d.bin").exists());
}

#[test]
fn reports_agree_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = ["verify", "--lemma", "2.4,2.6,5.3", "--seed", "5"];
    assert_eq!(code(&steklov(&[&args[..], &["--jobs", "1", "--report", p(&a)]].concat())), 0);
    assert_eq!(code(&steklov(&[&args[..], &["--jobs", "3", "--report", p(&b)]].concat())), 0);
    assert_eq!(without_timing(&a), without_timing(&b));
}

#[test]
fn converge_study_rejects_field_level_lemmas() {
    assert_eq!(code(&steklov(&["converge-study", "--lemma", "4.1"])), 2);
    assert_eq!(code(&steklov(&["verify", "--lemma", "7.7"])), 2);
    assert_eq!(code(&steklov(&["verify-all", "--dt", "0.3"])), 2);
}

#[test]
fn help_exits_cleanly() {
    let out = steklov(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["verify-all", "verify", "average", "converge-study", "gen-corpus"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
