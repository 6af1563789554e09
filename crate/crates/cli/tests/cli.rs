// Copyright 2026 The qnd Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use qnd_cli::scenarios::SCENARIOS;
use qnd_cli::{EXIT_CONFIG, EXIT_SIMULATION};

const SMALL_ROBUSTNESS: &str = r#"
scenario = "robustness"
seed = 5

[system]
omega_c_ghz = 8.264
omega_q_ghz = 6.998
g_max_mhz = 100.0
cavity_cutoff = 20

[pulse]
envelope = "erfc"
v1_per_ns = 2.0
t1_ns = 0.8
t2_ns = 4.2
tau_ns = 5.0

[cavity]
alpha_abs = 1.5

[robustness]
pct = [0.0, 2.0]
samples = 4
"#;

fn qnd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnd")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&read(dir, "manifest.json")).unwrap()
}

#[test]
fn lists_every_scenario() {
    let out = qnd(&["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for (name, _) in SCENARIOS {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn bundled_configs_validate() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, _) in SCENARIOS {
        let shown = qnd(&["show-config", name]);
        assert!(shown.status.success(), "{name}");
        let path = write(tmp.path(), &format!("{name}.toml"), &String::from_utf8(shown.stdout).unwrap());
        let out = qnd(&["validate", "--config", &path]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn validation_lists_all_problems() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = SMALL_ROBUSTNESS
        .replace("omega_q_ghz = 6.998", "omega_q_ghz = 2.0")
        .replace("t2_ns = 4.2", "t2_ns = 0.5");
    let path = write(tmp.path(), "bad.toml", &bad);
    let out = qnd(&["validate", "--config", &path]);
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("system.omega_q_ghz"), "{err}");
    assert!(err.contains("pulse.t2_ns"), "{err}");
}

#[test]
fn bounds_can_be_overridden() {
    let tmp = tempfile::tempdir().unwrap();
    let wide = SMALL_ROBUSTNESS.replace("omega_q_ghz = 6.998", "omega_q_ghz = 7.5");
    let path = write(tmp.path(), "wide.toml", &wide);
    assert_eq!(qnd(&["validate", "--config", &path]).status.code(), Some(EXIT_CONFIG));
    assert!(qnd(&["validate", "--config", &path, "--override-bounds"]).status.success());
}

#[test]
fn unknown_fields_and_scenarios_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write(tmp.path(), "typo.toml", &SMALL_ROBUSTNESS.replace("samples = 4", "sample = 4"));
    assert_eq!(qnd(&["validate", "--config", &path]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(qnd(&["run", "no-such-scenario"]).status.code(), Some(EXIT_CONFIG));
    assert_eq!(qnd(&["show-config", "no-such-scenario"]).status.code(), Some(EXIT_CONFIG));
}

#[test]
fn runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL_ROBUSTNESS);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = qnd(&["run", "robustness", "--config", &cfg, "--out", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(read(&a, "robustness.csv"), read(&b, "robustness.csv"));
    assert_eq!(read(&a, "summary.json"), read(&b, "summary.json"));
    let (ma, mb) = (manifest(&a), manifest(&b));
    assert_eq!(ma["config_sha256"], mb["config_sha256"]);
    assert_eq!(ma["seed"], 5);

    let c = tmp.path().join("c");
    let out = qnd(&["run", "robustness", "--config", &cfg, "--out", c.to_str().unwrap(), "--seed", "6"]);
    assert!(out.status.success());
    assert_ne!(manifest(&c)["config_sha256"], ma["config_sha256"]);
    assert_ne!(read(&c, "robustness.csv"), read(&a, "robustness.csv"));
}

#[test]
fn outputs_are_well_formed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL_ROBUSTNESS);
    let dir = tmp.path().join("out");
    assert!(qnd(&["run", "robustness", "--config", &cfg, "--out", dir.to_str().unwrap()]).status.success());
    let mut rdr = csv::Reader::from_path(dir.join("robustness.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    assert_eq!(&header[0], "pct");
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    // no perturbation means no spread
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.0);
    let m = manifest(&dir);
    let files: Vec<&str> = m["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap()).collect();
    assert!(files.contains(&"robustness.csv") && files.contains(&"summary.json"), "{files:?}");
    assert_eq!(m["tool_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn truncation_is_a_simulation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cramped = SMALL_ROBUSTNESS.replace("cavity_cutoff = 20", "cavity_cutoff = 4");
    let cfg = write(tmp.path(), "cramped.toml", &cramped);
    let dir = tmp.path().join("out");
    let out = qnd(&["run", "robustness", "--config", &cfg, "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_SIMULATION), "{}", String::from_utf8_lossy(&out.stderr));
}
