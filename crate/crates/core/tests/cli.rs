use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use record_erasure::disclosure::{required_max_length, DisclosurePolicy};
use record_erasure::report::{read_csv, EquilibriumReport};
use serde_json::json;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_record-erasure")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, cfg: serde_json::Value) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, cfg.to_string()).unwrap();
    p
}

fn product_choice(pi: f64) -> serde_json::Value {
    json!({
        "game": { "product_choice": { "b": 1.0, "x": 0.5, "c": 0.2 } },
        "delta_hat": 0.9,
        "delta_bar": 0.99,
        "pi": pi,
    })
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), product_choice(0.6));
    let out = dir.path().join("out");
    let o = bin(&["solve", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("payoff=0.0244668911336"));

    let rep = EquilibriumReport::from_json(&std::fs::read_to_string(out.join("equilibrium.json")).unwrap()).unwrap();
    assert!((rep.payoff - 0.024467).abs() < 1e-6);
    assert!((rep.params.delta - 0.891).abs() < 1e-12);
    let csv = std::fs::read_to_string(out.join("equilibrium.csv")).unwrap();
    assert!(csv.starts_with("# schema_version=1 equilibrium"));

    let o = bin(&["verify", s(&out.join("equilibrium.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with(", 0 failed\n"));
    let (header, rows) = read_csv(&std::fs::read_to_string(out.join("verification.csv")).unwrap()).unwrap();
    let pass = header.iter().position(|h| h == "pass").unwrap();
    assert!(!rows.is_empty() && rows.iter().all(|r| r[pass] == "true"));
}

#[test]
fn verify_rejects_tampered_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), product_choice(0.6));
    let out = dir.path().join("out");
    assert_eq!(bin(&["solve", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(0));
    let path = out.join("equilibrium.json");
    let mut rep = EquilibriumReport::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    rep.rows[2].value += 0.01;
    std::fs::write(&path, rep.to_json().unwrap()).unwrap();
    let o = bin(&["verify", s(&path)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fail k="));
}

#[test]
fn zero_prior_solves_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), product_choice(0.0));
    let out = dir.path().join("out");
    assert_eq!(bin(&["solve", "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(0));
    let rep = EquilibriumReport::from_json(&std::fs::read_to_string(out.join("equilibrium.json")).unwrap()).unwrap();
    assert_eq!(rep.payoff, 0.0);
}

#[test]
fn non_supermodular_game_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        json!({
            "game": {
                "a1": ["L", "H"], "a2": ["N", "T"],
                "u1": [[0.0, 2.0], [-1.0, 1.0]],
                "u2": [[0.0, 0.5], [0.5, -0.5]],
                "a1_star": "H", "c": 0.2
            },
            "delta_hat": 0.9, "delta_bar": 0.99, "pi": 0.6
        }),
    );
    let o = bin(&["solve", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!o.stderr.is_empty());
    assert!(!dir.path().join("out").join("equilibrium.json").exists());
}

#[test]
fn two_step_sweep_has_two_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), product_choice(0.6));
    let out = dir.path().join("out");
    let o = bin(&["sweep", "--config", s(&cfg), "--out", s(&out), "--sweep", "delta_bar=0.95:0.99:2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.starts_with("# schema_version=1 sweep"));
    let (header, rows) = read_csv(&text).unwrap();
    assert_eq!(header[0], "delta_bar");
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "0.95");
    assert_eq!(rows[1][0], "0.99");
}

#[test]
fn one_step_sweep_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), product_choice(0.6));
    let o = bin(&["sweep", "--config", s(&cfg), "--out", s(&dir.path().join("o")), "--sweep", "pi=0.1:0.9:1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn disclose_without_disclosure_prints_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), product_choice(0.3));
    let policy = dir.path().join("policy.json");
    std::fs::write(&policy, DisclosurePolicy::none(required_max_length(0.99)).to_json().unwrap()).unwrap();
    let out = dir.path().join("out");
    let o = bin(&["disclose", "--config", s(&cfg), "--out", s(&out), "--policy", s(&policy)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("bounds: lower=0 upper=0.0244668911336"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("disclosure.json")).unwrap()).unwrap();
    let q0 = v["q_tilde"][0].as_f64().unwrap();
    assert!((q0 - 1.0).abs() < 1e-8 && v["q_tilde"].as_array().unwrap().len() == 1);
}

#[test]
fn simulate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = product_choice(0.6);
    cfg["delta_bar"] = json!(0.95);
    cfg["sim"] = json!({ "n_agents": 5000, "n_periods": 200, "burn_in": 50 });
    let cfg = write_config(dir.path(), cfg);
    let files = ["sim_stats.json", "sim_records.csv", "sim_consumer.csv"];
    let mut runs = vec![];
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = bin(&["simulate", "--config", s(&cfg), "--out", s(&out), "--seed", "17"]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        runs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn missing_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["solve", "--config", s(&dir.path().join("nope.json"))]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));
    assert_eq!(bin(&["verify", s(&dir.path().join("nope.json"))]).status.code(), Some(4));

    let mut cfg = product_choice(0.6);
    cfg.as_object_mut().unwrap().remove("game");
    cfg["game_file"] = json!("missing_game.json");
    let cfg = write_config(dir.path(), cfg);
    assert_eq!(bin(&["solve", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]).status.code(), Some(4));
}

#[test]
fn config_with_both_game_sources_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = product_choice(0.6);
    cfg["game_file"] = json!("g.json");
    let cfg = write_config(dir.path(), cfg);
    assert_eq!(bin(&["solve", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]).status.code(), Some(3));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}
