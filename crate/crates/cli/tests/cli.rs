use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_halfplane"))
}

fn configs() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).filter(|p| p.extension().is_some_and(|e| e == "json")).collect();
    v.sort();
    v
}

fn tag_of(path: &Path) -> String {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["tag"].as_str().unwrap().to_string()
}

fn run_verify(cfg: &Path, dir: &Path, stem: &str) -> (Output, Vec<u8>, Vec<u8>) {
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    let out = bin()
        .args(["verify", &tag_of(cfg), "--config"])
        .arg(cfg)
        .arg("--csv")
        .arg(&csv)
        .arg("--json")
        .arg(&json)
        .output()
        .unwrap();
    (out, fs::read(&csv).unwrap_or_default(), fs::read(&json).unwrap_or_default())
}

#[test]
fn every_bundled_config_passes_and_every_tag_is_covered() {
    let dir = tempfile::tempdir().unwrap();
    let mut tags = BTreeSet::new();
    for cfg in configs() {
        let (out, csv, _) = run_verify(&cfg, dir.path(), "run");
        assert_eq!(out.status.code(), Some(0), "{}: {}", cfg.display(), String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&csv).starts_with("trial,label,lhs,rhs,ratio"));
        tags.insert(tag_of(&cfg));
    }
    for t in halfplane::lab::TheoremTag::ALL {
        assert!(tags.contains(t.code()), "no bundled config for {t}");
    }
}

#[test]
fn identical_configs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["t2_1a_weighted.json", "t2_4_sawyer_unweighted.json", "c2_1_explicit_constant.json", "s5_sharpness.json"] {
        let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
        let (_, csv1, json1) = run_verify(&cfg, dir.path(), "a");
        let (_, csv2, json2) = run_verify(&cfg, dir.path(), "b");
        assert!(!csv1.is_empty());
        assert_eq!(csv1, csv2, "{name}: CSV differs");
        assert_eq!(json1, json2, "{name}: JSON differs");
    }
}

#[test]
fn bekolle_bonami_of_a_power_weight() {
    let out = bin().args(["constant", "Bp", "--weight", "power_y 0.5", "--p", "2", "--alpha", "0"]).output().unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["name"], "B_p_alpha");
    assert!((v["value"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-9);
}

#[test]
fn sharpness_table_and_targets() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("s.json");
    let out = bin()
        .args(["sharpness", "--p", "2", "--alpha", "0", "--gamma", "0.5", "--eps", "0.2,0.1,0.05,0.025", "--json"])
        .arg(&json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(table.lines().count(), 5);
    let v: Value = serde_json::from_slice(&fs::read(json).unwrap()).unwrap();
    let ratio = v["fits"].as_array().unwrap().iter().find(|f| f["name"] == "ratio").unwrap();
    assert_eq!(ratio["target"].as_f64().unwrap(), 0.75);
}

#[test]
fn measure_of_a_box() {
    let out = bin().args(["measure", "--interval", "0,2", "--alpha", "1"]).output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    let out = bin().args(["measure", "--interval", "0,1", "--alpha", "0", "--top-half"]).output().unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn maximal_eval_writes_one_row_per_point() {
    let out = bin().args(["maximal-eval", "--op", "dyadic", "--f", "box 0 1", "--points", "0.5,0.25;0.5,0.75;3,1"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "x,y,value,lower,upper,tail_flag");
    assert_eq!(rows.len(), 4);
    // inside the box the average over Q_[0,1) is 1
    let v: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-12);
}

#[test]
fn config_errors_exit_three_with_a_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"tag": "T2.2", "params": {"p": 2, "alpha": 0}, "window": {"j_min": -5, "j_max": 3, "x_lo": -4, "x_hi": 4}, "omega": "power_y"}"#).unwrap();
    let out = bin().args(["verify", "T2.2", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega"));
    let out = bin().args(["verify", "T2.1a", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin().args(["verify", "T9.9", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin().args(["constant", "Bp", "--window", "3,1,0,1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin().args(["sharpness", "--p", "2", "--eps", "0.2,abc"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}
