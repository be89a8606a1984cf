use std::path::Path;
use std::process::{Command, Output};

use materiality::fixtures::{graph_fixture, scm_fixture};
use materiality::graph::to_json;
use materiality::scm::FiniteScm;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_materiality")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_graph(dir: &Path, name: &str) -> String {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, to_json(&graph_fixture(name).unwrap().graph())).unwrap();
    path.to_string_lossy().into_owned()
}

fn write_scm(dir: &Path, name: &str) -> String {
    let path = dir.join(format!("{name}.scm.json"));
    let m = FiniteScm::from_doc(scm_fixture(name).unwrap().doc()).unwrap();
    std::fs::write(&path, m.to_json()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn check_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "triangle");
    let out = run(&["check", &g]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["command"], "check");
    assert_eq!(r["result"]["edges"][0]["verdict"], "ImmaterialLB2");
    assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn voi_on_fixture_model() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_scm(dir.path(), "obstacle-2");
    let out = run(&["voi", &m, "--decision", "X0", "--context", "Z0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["meu_with"]["value"], "1099/100");
    assert_eq!(r["result"]["meu_without"]["value"], "219/20");
    assert_eq!(r["result"]["voi"]["value"], "1/25");
}

#[test]
fn scope_edits_drop_a_context() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_scm(dir.path(), "yes-voi");
    let full = report(&run(&["meu", &m]));
    assert_eq!(full["result"]["meu"]["value"], "1/1");
    let out = run(&["meu", &m, "--scope-edits", "-Z->X"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["meu"]["value"], "1/2");
    assert_eq!(r["result"]["scope"]["X"], serde_json::json!([]));
}

#[test]
fn synthesized_model_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let g = write_graph(dir.path(), "finite-domain");
    let model = dir.path().join("model.json");
    let model = model.to_str().unwrap();
    let out = run(&["synthesize", &g, "--decision", "X0", "--context", "Z0", "--k-override", "1", "--out", model]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["params"]["guarantees_void"], true);
    assert!(!r["warnings"].as_array().unwrap().is_empty());
    let out = run(&["voi", model, "--decision", "X0", "--context", "Z0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["result"]["meu_with"]["value"], "1/1");
    assert_eq!(r["result"]["meu_without"]["value"], "3/4");
}

#[test]
fn json_out_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_scm(dir.path(), "yes-voi");
    let copy = dir.path().join("report.json");
    let out = run(&["--json-out", copy.to_str().unwrap(), "meu", &m]);
    assert_eq!(out.status.code(), Some(0));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&copy).unwrap()).unwrap();
    assert_eq!(saved, report(&out));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["check", "/nonexistent/graph.json"]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["meu", bad.to_str().unwrap()]).status.code(), Some(2));
    let m = write_scm(dir.path(), "obstacle-2");
    let out = run(&["--budget", "1", "meu", &m]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
    let g = write_graph(dir.path(), "yes-voi");
    let out = run(&["synthesize", &g, "--decision", "X", "--context", "Z", "--max-bits", "0"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(run(&["reproduce", "no-such-fixture"]).status.code(), Some(2));
}

#[test]
fn reproduce_single_fixture() {
    let out = run(&["--seed", "5", "reproduce", "linear-no-voi"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["seed"], 5);
    let list = run(&["reproduce", "list"]);
    assert!(String::from_utf8_lossy(&list.stdout).contains("superimposed"));
}
