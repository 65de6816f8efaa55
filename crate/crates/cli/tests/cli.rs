use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FIXTURE: &str = r#"{"n": 1, "coin": {"p_L": 0.7, "p_R": 0.2}}"#;
const FIXTURE_N2: &str = r#"{"n": 2, "coin": {"p_L": 0.7, "p_R": 0.2}}"#;
const VIOLATING: &str = r#"{"n": 1, "coin": {"p_L": 0.1, "p_R": 0.35}}"#;

struct Env {
    dir: TempDir,
}

impl Env {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn config(&self, name: &str, body: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn crw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crw"))
        .args(args)
        .env_remove("CRW_LOG")
        .output()
        .expect("run crw")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

fn close(got: &[f64], want: &[f64], tol: f64) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(a, b)| (a - b).abs() <= tol)
}

#[test]
fn validate_accepts_and_rejects() {
    let env = Env::new();
    let ok = crw(&["validate", p(&env.config("m.json", FIXTURE))]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("nu2 = 0.5"), "{}", stdout(&ok));

    let edge = env.config(
        "edge.json",
        r#"{"n": 1, "coins": [{"p_L": 0.7, "p_R": 0.2}, {"p_L": 1.0, "p_R": 0.5}]}"#,
    );
    let o = crw(&["validate", p(&edge)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("vertex 1"), "{}", stderr(&o));

    let mixed = env.config(
        "mixed.json",
        r#"{"n": 1, "coins": [{"p_L": 0.7, "p_R": 0.2}, {"p_L": 0.6, "p_R": 0.2}]}"#,
    );
    let o = crw(&["validate", p(&mixed)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("isospectral"), "{}", stderr(&o));
}

#[test]
fn parse_and_io_errors_exit_three() {
    let env = Env::new();
    assert_eq!(
        code(&crw(&["validate", p(&env.config("b.json", "{\"n\": 1,"))])),
        3
    );
    assert_eq!(
        code(&crw(&[
            "validate",
            p(&env.config("u.json", r#"{"n":1,"coin":{"p_L":0.7,"p_R":0.2},"x":1}"#))
        ])),
        3
    );
    assert_eq!(code(&crw(&["validate", p(&env.path("missing.json"))])), 3);
}

#[test]
fn spectrum_of_fixture() {
    let env = Env::new();
    let cfg = env.config("m.json", FIXTURE);
    let o = crw(&["spectrum", p(&cfg), "--json", "--dump-B", "--dump-J"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    let mus: Vec<f64> = r["results"]["spec_u"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["mu"].as_f64().unwrap())
        .collect();
    let s = 0.5f64.sqrt();
    assert!(close(&mus, &[1.0, s, 0.5, -s], 1e-10), "{mus:?}");
    let b: Vec<Vec<f64>> = serde_json::from_value(r["results"]["b"].clone()).unwrap();
    assert!(close(&b[0], &[-0.6, 0.4], 1e-12) && close(&b[1], &[0.6, -0.4], 1e-12));
    assert!(close(&floats(&r["results"]["pi"]), &[0.4, 0.6], 1e-12));
    assert_eq!(r["model"]["n"], 1);

    let text = stdout(&crw(&["spectrum", p(&cfg)]));
    assert!(text.contains("0.707106781186547"), "{text}");
}

#[test]
fn spectrum_rejects_violating_model() {
    let env = Env::new();
    let o = crw(&["spectrum", p(&env.config("v.json", VIOLATING))]);
    assert_eq!(code(&o), 4);
    let err = stderr(&o);
    assert!(err.contains("(0.8, 1]") && err.contains("lambda"), "{err}");
}

#[test]
fn spectrum_csv_to_file() {
    let env = Env::new();
    let out = env.path("spec.csv");
    let o = crw(&[
        "spectrum",
        p(&env.config("m.json", FIXTURE)),
        "--csv",
        "--output",
        p(&out),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rank,mu,tag,source_index,lambda");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("3,-0.707106781186547,minus,1,"));
}

#[test]
fn limit_fixtures() {
    let env = Env::new();
    let r = json(&crw(&[
        "limit",
        p(&env.config("m.json", FIXTURE)),
        "--json",
    ]));
    assert!(close(&floats(&r["results"]["p_inf"]), &[0.4, 0.6], 1e-12));
    assert!(r["results"]["max_abs_diff"].as_f64().unwrap() < 1e-9);

    let r = json(&crw(&[
        "limit",
        p(&env.config("m2.json", FIXTURE_N2)),
        "--json",
    ]));
    let want: Vec<f64> = [1.0, 1.5, 2.25].iter().map(|w| w / 4.75).collect();
    assert!(close(&floats(&r["results"]["p_inf"]), &want, 1e-12));

    let bad = env.config("bad.json", r#"{"n": 1, "coin": {"p_L": 0.2, "p_R": 0.2}}"#);
    assert_eq!(code(&crw(&["limit", p(&bad)])), 2);
    assert_eq!(
        code(&crw(&["limit", p(&env.config("v.json", VIOLATING))])),
        4
    );
}

#[test]
fn evolve_fixtures() {
    let env = Env::new();
    let cfg = env.config("m.json", FIXTURE);
    let run = |args: &[&str]| {
        let mut full = vec!["evolve", p(&cfg), "--json"];
        full.extend_from_slice(args);
        let o = crw(&full);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        json(&o)["results"].clone()
    };

    let r = run(&["--t", "0", "--init", "1,R", "--method", "both"]);
    assert!(close(&floats(&r["spectral"]), &[0.0, 1.0], 1e-12));
    assert_eq!(floats(&r["dense"]), vec![0.0, 1.0]);

    let r = run(&["--t", "1", "--method", "both"]);
    assert!(close(&floats(&r["dense"]), &[0.7, 0.3], 1e-15));
    assert!(r["max_abs_diff"].as_f64().unwrap() < 1e-12);

    let r = run(&["--t", "10000"]);
    assert!(close(&floats(&r["spectral"]), &[0.4, 0.6], 1e-8));
    assert!(r.get("dense").is_none());

    let o = crw(&["evolve", p(&cfg), "--t", "1", "--init", "2,L"]);
    assert_eq!(code(&o), 2);
    let o = crw(&["evolve", p(&cfg), "--t", "1", "--init", "0,Q"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn simulate_fixtures() {
    let env = Env::new();
    let cfg = env.config("m.json", FIXTURE);
    let run = |args: &[&str]| {
        let mut full = vec!["simulate", p(&cfg), "--out", "json"];
        full.extend_from_slice(args);
        let o = crw(&full);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        json(&o)["results"].clone()
    };

    let a = run(&["--walkers", "20000", "--t", "37", "--seed", "9"]);
    let b = run(&["--walkers", "20000", "--t", "37", "--seed", "9"]);
    let c = run(&["--walkers", "20000", "--t", "37", "--seed", "10"]);
    assert_eq!(a["empirical"], b["empirical"]);
    assert_ne!(a["empirical"], c["empirical"]);

    let r = run(&["--walkers", "100000", "--t", "1000", "--seed", "1"]);
    assert!(r["tv_distance"].as_f64().unwrap() < 0.01, "{r}");

    let r = run(&["--walkers", "1", "--t", "0", "--init", "1,L"]);
    assert_eq!(floats(&r["empirical"]), vec![0.0, 1.0]);

    let out = env.path("hist.csv");
    let o = crw(&[
        "simulate",
        p(&cfg),
        "--walkers",
        "1000",
        "--t",
        "3",
        "--out",
        "csv",
        "--output",
        p(&out),
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("x,empirical,exact\n0,"), "{text}");

    assert_eq!(code(&crw(&["simulate", p(&cfg), "--walkers", "0"])), 2);
}

#[test]
fn verify_default_sweep_passes() {
    let o = crw(&["verify", "--json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["passed"], true);
    assert_eq!(r["results"]["models"].as_array().unwrap().len(), 40);
    assert_eq!(r["results"]["skipped_models"], 0);
    assert!(r["checks"].as_array().unwrap().len() > 25);
}

#[test]
fn verify_single_model_and_negative_control() {
    let env = Env::new();
    let cfg = env.config("m.json", FIXTURE);
    let o = crw(&["verify", p(&cfg), "--monte-carlo"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("PASS  monte_carlo_agreement"));

    let het = env.config(
        "h.json",
        r#"{"n": 2, "coins": [{"p_L": 0.7, "p_R": 0.2}, {"p_L": 0.6, "p_R": 0.1}, {"p_L": 0.8, "p_R": 0.3}]}"#,
    );
    let o = crw(&["verify", p(&het), "--corrupt-b-spectrum", "1.05"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("reconstruction"), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL  reconstruction"));
}

#[test]
fn json_report_round_trips() {
    let env = Env::new();
    let o = crw(&["verify", p(&env.config("m.json", FIXTURE)), "--json"]);
    let text = stdout(&o);
    let v: Value = serde_json::from_str(&text).unwrap();
    for key in [
        "command",
        "model",
        "results",
        "checks",
        "passed",
        "wall_time_s",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["model"]["coins_sha256"].as_str().unwrap().len(), 64);
    let again = serde_json::to_string_pretty(&v).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&again).unwrap(), v);
}

#[test]
fn log_level_from_env() {
    let env = Env::new();
    let o = Command::new(env!("CARGO_BIN_EXE_crw"))
        .args(["validate", p(&env.config("m.json", FIXTURE))])
        .env("CRW_LOG", "debug")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("loaded"), "{}", stderr(&o));
    assert!(stderr(&crw(&["validate", p(&env.config("m.json", FIXTURE))])).is_empty());
}
