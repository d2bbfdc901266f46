use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_qwitness");

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/eq15.json")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write_doc(dir: &TempDir, name: &str, a: [f64; 3], b: [f64; 3], state: &str) -> String {
    let text = format!(
        r#"{{"version": 1,
  "A": {{"a11": {}, "a22": {}, "a12_re": {}, "a12_im": 0.0}},
  "B": {{"a11": {}, "a22": {}, "a12_re": {}, "a12_im": 0.0}},
  "state": {state},
  "metadata": {{}}}}"#,
        a[0], a[1], a[2], b[0], b[1], b[2]
    );
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const PURE: &str = r#"{"kind": "pure", "alpha_re": 0.6, "alpha_im": 0.0, "beta_re": 0.8, "beta_im": 0.0}"#;
const MIXED: &str = r#"{"kind": "mixed", "rho11": 0.5, "rho22": 0.5, "rho12_re": 0.1, "rho12_im": 0.0}"#;

#[test]
fn verify_golden() {
    let o = run(&["verify", fixture().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["ordering"]["ordered"], true);
    assert_eq!(v["violation"]["witnessed"], true);
    let g = v["violation"]["second_gap"].as_f64().unwrap();
    assert!((g + 0.0590).abs() <= 5e-4, "{g}");
}

#[test]
fn verify_bound_breach_and_bad_input() {
    let dir = TempDir::new().unwrap();
    let doc = write_doc(&dir, "b.json", [0.5, 0.1, 0.0], [1.0, 1.5, 0.0], PURE);
    assert_eq!(code(&run(&["verify", &doc])), 2);

    let text = std::fs::read_to_string(fixture()).unwrap();
    let truncated = dir.path().join("t.json");
    std::fs::write(&truncated, &text[..text.len() / 3]).unwrap();
    let o = run(&["verify", truncated.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    assert_eq!(code(&run(&["verify", "/nonexistent/file.json"])), 3);
}

#[test]
fn optimize_reproduces_triple_and_verifies() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("opt.json");
    let o = run(&["optimize", "--grid", "0.001", "--tol", "1e-8", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let a1 = doc["A"]["a11"].as_f64().unwrap();
    let b = doc["B"]["a22"].as_f64().unwrap();
    assert!((a1 - 0.724).abs() <= 2e-3, "{a1}");
    assert!((b - 0.309).abs() <= 2e-3, "{b}");
    assert!(doc["metadata"]["optimizer"]["evaluations"].as_u64().unwrap() > 0);
    assert_eq!(code(&run(&["verify", out.to_str().unwrap()])), 0);

    let again = run(&["optimize", "--grid", "0.001", "--tol", "1e-8"]);
    assert_eq!(again.stdout, std::fs::read(&out).unwrap());
}

#[test]
fn optimize_full_reports_slacks() {
    let o = run(&["optimize", "--grid", "0.001", "--full"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let slacks = v["metadata"]["full_search"]["slacks"].as_array().unwrap();
    for s in slacks {
        assert!(s.as_f64().unwrap().abs() < 0.004, "{s}");
    }
    assert!(String::from_utf8_lossy(&o.stderr).contains("constraint slacks"));
}

#[test]
fn optimize_rejects_bad_flags() {
    assert_eq!(code(&run(&["optimize", "--grid", "0.5"])), 3);
    assert_eq!(code(&run(&["optimize", "--tol", "-1"])), 3);
    assert_eq!(code(&run(&["optimize", "--grid", "abc"])), 3);
}

#[test]
fn simulate_golden_witnesses() {
    let f = fixture();
    let args = ["simulate", "--triple", f.to_str().unwrap(), "--shots", "1000000", "--seed", "42"];
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!(v["verdict"]["z_score"].as_f64().unwrap() >= 5.0);
    assert_eq!(v["verdict"]["stage1_pass"], true);
    assert_eq!(run(&args).stdout, o.stdout);
}

#[test]
fn simulate_noise_beyond_threshold() {
    let f = fixture();
    let o = run(&[
        "simulate", "--triple", f.to_str().unwrap(), "--shots", "1000000", "--seed", "42", "--noise", "depolarizing:0.35",
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["verdict"]["stage2_violation"], false);
}

#[test]
fn simulate_usage_errors() {
    let f = fixture();
    let f = f.to_str().unwrap();
    assert_eq!(code(&run(&["simulate", "--triple", f, "--shots", "0", "--seed", "1"])), 3);
    assert_eq!(code(&run(&["simulate", "--triple", f, "--seed", "1", "--noise", "depolarizing:2"])), 3);
    assert_eq!(code(&run(&["simulate", "--triple", f, "--seed", "1", "--noise", "pink"])), 3);
    assert_eq!(code(&run(&["simulate", "--triple", f])), 3);
}

#[test]
fn simulate_exact_mode_and_plan() {
    let f = fixture();
    let o = run(&["simulate", "--triple", f.to_str().unwrap(), "--seed", "1", "--exact", "--probe-grid", "0"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!(v["verdict"]["z_score"].is_null());

    let dir = TempDir::new().unwrap();
    let plan = dir.path().join("plan.json");
    let triple: Value = serde_json::from_str(&std::fs::read_to_string(&f).unwrap()).unwrap();
    let plan_doc = serde_json::json!({
        "version": 1, "triple": triple, "seed": 5, "shots": 20000, "probe_grid": 4, "noise": "depolarizing:0.05",
    });
    std::fs::write(&plan, plan_doc.to_string()).unwrap();
    let o = run(&["simulate", "--plan", plan.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["config"]["probe_states"], 5);
    assert_eq!(v["config"]["seed"], 5);
    assert_eq!(v["config"]["noise"], "depolarizing:0.05");
}

#[test]
fn sweep_recovers_threshold() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let f = fixture();
    let args = [
        "sweep", "--triple", f.to_str().unwrap(), "--seed", "42", "--from", "0", "--to", "0.4", "--steps", "81", "--shots",
        "100000", "--out", out.to_str().unwrap(),
    ];
    let o = run(&args);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "p,first_gap,first_gap_se,second_gap,second_gap_se,z,stage1_pass,stage2_violation"
    );
    assert_eq!(lines.count(), 81);
    let stdout = String::from_utf8(o.stdout).unwrap();
    let p: f64 = stdout
        .trim()
        .strip_prefix("p* = ")
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("{stdout}"));
    assert!((p - 0.211).abs() <= 0.01, "{p}");

    let first = std::fs::read(&out).unwrap();
    assert_eq!(code(&run(&args)), 0);
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn sweep_edge_cases() {
    let f = fixture();
    let f = f.to_str().unwrap();
    let o = run(&["sweep", "--triple", f, "--seed", "1", "--steps", "2", "--shots", "1000"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
    assert_eq!(code(&run(&["sweep", "--triple", f, "--seed", "1", "--from", "0.5", "--to", "0.1"])), 3);
    assert_eq!(code(&run(&["sweep", "--triple", f, "--seed", "1", "--out", "/nonexistent/dir/x.csv"])), 3);
    assert_eq!(code(&run(&["sweep", "--triple", f])), 3);
}

#[test]
fn angles_golden() {
    let o = run(&["angles", fixture().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let basis = v["basis_rotation_deg"].as_f64().unwrap();
    let state = v["state_angle_deg"].as_f64().unwrap();
    assert!((basis - 19.0).abs() <= 0.5, "{basis}");
    assert!((state - 67.0).abs() <= 0.5, "{state}");
    let vb: Vec<f64> = v["outcome_values_B"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let va: Vec<f64> = v["outcome_values_A"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((vb[0] - 1.0).abs() < 5e-4 && (vb[1] - 0.309).abs() < 5e-4, "{vb:?}");
    assert!((va[0] - 0.809).abs() < 5e-4 && va[1].abs() < 5e-4, "{va:?}");
}

#[test]
fn angles_diagonal_and_mixed() {
    let dir = TempDir::new().unwrap();
    let diag = write_doc(&dir, "d.json", [0.5, 0.2, 0.0], [1.0, 0.4, 0.0], PURE);
    let o = run(&["angles", &diag]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["basis_rotation_deg"].as_f64().unwrap(), 0.0);

    let mixed = write_doc(&dir, "m.json", [0.5, 0.2, 0.0], [1.0, 0.4, 0.0], MIXED);
    let o = run(&["angles", &mixed]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("pure state"));
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(code(&run(&[])), 3);
    assert_eq!(code(&run(&["frobnicate"])), 3);
    assert_eq!(code(&run(&["verify"])), 3);
    assert_eq!(code(&run(&["--help"])), 0);
}
