use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value as J;

fn corpus(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus").join(format!("{name}.solo"));
    p.to_string_lossy().into_owned()
}

fn dpsens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpsens")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> J {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn check_prints_the_type() {
    let o = dpsens(&["check", &corpus("dbl")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "sreal diff [db:2]");
}

#[test]
fn bundled_examples_resolve_by_name() {
    let o = dpsens(&["check", "examples/dbl.solo"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "sreal diff [db:2]");
}

#[test]
fn type_errors_exit_one() {
    for (name, code) in [("dangerous_map", "EnvEscape"), ("sum_no_clip", "MetricMismatch")] {
        let o = dpsens(&["check", &corpus(name)]);
        assert_eq!(o.status.code(), Some(1));
        assert!(String::from_utf8_lossy(&o.stderr).contains(code));
        let o = dpsens(&["check", &corpus(name), "--format", "json"]);
        assert_eq!(json(&o)["code"], code);
    }
}

#[test]
fn parse_errors_exit_two() {
    let dir = std::env::temp_dir().join("dpsens-cli-parse");
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("bad.solo");
    std::fs::write(&f, "main = fn x => x;").unwrap();
    let o = dpsens(&["check", f.to_str().unwrap(), "--format", "json"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["code"], "ParseError");
}

#[test]
fn missing_file_exits_three() {
    let o = dpsens(&["check", "/nonexistent/nothing.txt"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn budget_tables() {
    let o = dpsens(&["budget", &corpus("add_noise_twice")]);
    assert_eq!(stdout(&o).trim(), "o: eps = 5");
    let o = dpsens(&["budget", &corpus("mwem"), "--format", "json"]);
    let b = &json(&o)["budget"][0];
    assert_eq!(b["source"], "real_data");
    assert_eq!(b["eps"], 4.0);
    let o = dpsens(&["budget", &corpus("dbl")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("NotAPrivateProgram"));
}

#[test]
fn run_is_deterministic() {
    let a = dpsens(&["run", &corpus("add_noise_twice"), "--seed", "7", "--trace"]);
    let b = dpsens(&["run", &corpus("add_noise_twice"), "--seed", "7", "--trace"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let lines: Vec<String> = stdout(&a).lines().map(String::from).collect();
    assert_eq!(lines.len(), 4);
    let event: J = serde_json::from_str(&lines[0]).unwrap();
    assert_eq!(event["mechanism"], "laplace");
}

#[test]
fn run_with_inputs() {
    let dir = std::env::temp_dir().join("dpsens-cli-inputs");
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("in.json");
    std::fs::write(&f, r#"{"input_db": [0.5, 2, -1, 0.25]}"#).unwrap();
    let o = dpsens(&["run", &corpus("summation"), "--inputs", f.to_str().unwrap(), "--format", "json"]);
    assert_eq!(json(&o)["value"], 1.75);
    std::fs::write(&f, r#"{"other": 1}"#).unwrap();
    let o = dpsens(&["run", &corpus("summation"), "--inputs", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn out_of_fuel_is_reported() {
    let o = dpsens(&["run", &corpus("adv_comp"), "--fuel", "10", "--format", "json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(json(&o)["message"].as_str().unwrap().contains("fuel"));
}

#[test]
fn verify_commands() {
    let o = dpsens(&["verify", "metric", &corpus("dbl"), "--trials", "200", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["pass"], true);
    let o = dpsens(&["verify", "dp", &corpus("laplace1")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
    let o = dpsens(&["verify", "dp", &corpus("miscalibrated"), "--eps", "1"]);
    assert_eq!(o.status.code(), Some(4));
    let o = dpsens(&["verify", "metric", &corpus("laplace1")]);
    assert_eq!(o.status.code(), Some(3));
    let o = dpsens(&["verify", "lemmas", "--trials", "200", "--format", "json"]);
    assert_eq!(json(&o)["pass"], true);
}

#[test]
fn examples_listing() {
    let o = dpsens(&["examples", "--list"]);
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert!(names.len() >= 12);
    assert!(names.contains(&"kmeans_iter".to_string()));
    let o = dpsens(&["examples", "dbl"]);
    assert!(stdout(&o).contains("def dbl"));
}

#[test]
fn help_documents_flags() {
    let o = dpsens(&["verify", "dp", "--help"]);
    let h = stdout(&o);
    for flag in ["--grid", "--tol", "--eps", "--inputs", "--format"] {
        assert!(h.contains(flag), "{flag} missing from help");
    }
    let h = stdout(&dpsens(&["run", "--help"]));
    for flag in ["--seed", "--fuel", "--trace", "--inputs"] {
        assert!(h.contains(flag), "{flag} missing from help");
    }
}
