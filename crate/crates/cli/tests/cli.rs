use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rydcoul_cli::output::MANIFEST;
use rydcoul_cli::verify_manifest;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rydcoul"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    let status = bin()
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
        .status;
    status.code().unwrap()
}

const WKB: &str = r#"{
  "kind": "wkb",
  "params": { "mode": "groups", "eta": 0.05, "f0": 40.0, "rho": 0.01 },
  "wkb": { "k_bar": { "start": 0.97, "stop": 0.99, "count": 3 }, "n_max": 2, "slope_at": 0.0 }
}"#;

const EVOLVE: &str = r#"{
  "kind": "evolve",
  "params": { "mode": "groups", "eta": 0.05, "f0": 40.0, "rho": 0.25, "gamma_over_delta": 0.05, "gamma_r_over_delta": 0.01 },
  "evolve": {
    "length": 4.0,
    "cells_per_rb": 10,
    "t_final": 0.3,
    "cutoff_radius": 3.0,
    "snapshots": [0.5, 1.0],
    "observe_every": 2,
    "initial": { "n": 1, "sigma": 0.1, "omega_center": -0.45, "r_center": 2.0 }
  }
}"#;

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.json", "{ \"kind\": \"wkb\", ");
    let out = tmp.path().join("out");
    assert_eq!(run("wkb", &cfg, &out, &[]), 2);
    assert!(!out.exists());
    let unknown = write_config(tmp.path(), "unknown.json", &WKB.replace("\"n_max\"", "\"n_maximum\""));
    assert_eq!(run("wkb", &unknown, &out, &[]), 2);
    assert!(!out.exists());
}

#[test]
fn kind_must_match_subcommand() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "wkb.json", WKB);
    let out = tmp.path().join("out");
    assert_eq!(run("dispersion", &cfg, &out, &[]), 2);
    assert!(!out.exists());
}

#[test]
fn outside_validity_window_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "pot.json",
        r#"{
  "kind": "potential",
  "params": { "mode": "groups", "eta": 0.05, "f0": 40.0, "rho": 0.2 },
  "potential": { "omega_bar": 0.0, "k_bar": 0.999, "r": { "start": 0.0, "stop": 2.0, "count": 11 } }
}"#,
    );
    let out = tmp.path().join("out");
    assert_eq!(run("potential", &cfg, &out, &[]), 3);
    assert!(!out.exists());
}

#[test]
fn manifest_lists_every_file_and_detects_truncation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "wkb.json", WKB);
    let out = tmp.path().join("out");
    assert_eq!(run("wkb", &cfg, &out, &[]), 0);
    assert!(verify_manifest(&out).unwrap().is_empty());
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join(MANIFEST)).unwrap()).unwrap();
    let listed: Vec<&str> = m["files"].as_array().unwrap().iter().map(|e| e["file"].as_str().unwrap()).collect();
    for name in ["wkb.csv", "velocity.csv", "scenario.json"] {
        assert!(listed.contains(&name), "{name}");
    }
    let csv = out.join("wkb.csv");
    let data = fs::read(&csv).unwrap();
    fs::write(&csv, &data[..data.len() / 2]).unwrap();
    assert_eq!(verify_manifest(&out).unwrap(), vec!["wkb.csv".to_string()]);
}

#[test]
fn evolve_outputs_are_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "evolve.json", EVOLVE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("evolve", &cfg, &a, &["--threads", "2"]), 0);
    assert_eq!(run("evolve", &cfg, &b, &["--snapshot-format", "json-gz"]), 0);
    let c = tmp.path().join("c");
    assert_eq!(run("evolve", &cfg, &c, &["--snapshot-format", "json-gz", "--threads", "1"]), 0);
    assert_eq!(files(&b), files(&c));
    // csv and gz runs agree on everything except the snapshot files and the manifest
    let strip = |v: Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
        v.into_iter().filter(|(n, _)| !n.starts_with("snapshot_") && n != MANIFEST).collect()
    };
    assert_eq!(strip(files(&a)), strip(files(&b)));
    for name in ["series.csv", "track.csv", "velocity.json", "double_peak.json", "marginal.csv", "snapshot_000.csv"] {
        assert!(a.join(name).exists(), "{name}");
    }
}

#[test]
fn scenario_files_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let cfg = rydcoul_cli::ScenarioConfig::from_json(&fs::read_to_string(&p).unwrap());
        assert!(cfg.and_then(|c| c.validate()).is_ok(), "{}", p.display());
    }
}
