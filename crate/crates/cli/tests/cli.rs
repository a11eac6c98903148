use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn orbaut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbaut")).args(args).env_remove("ORBIFOLD_CACHE").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn scratch_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("orbaut-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn golay_verify() {
    let out = orbaut(&["golay", "verify"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["octads"], 759);
    assert_eq!(v["codewords"], 4096);
    assert_eq!(v["m24_order"], "244823040");
}

#[test]
fn appendix_dim_three() {
    let out = orbaut(&["fqspace", "appendix", "--n", "3", "--p", "7"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["pass"], true);
    let orbit = v["items"].as_array().unwrap().iter().find(|i| i["prop_id"] == "omega3_singular_orbit").unwrap();
    assert_eq!(orbit["computed"], 24);
}

#[test]
fn appendix_rejects_plus_type() {
    let out = orbaut(&["fqspace", "appendix", "--n", "4", "--p", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "unsupported");
}

#[test]
fn orbifold_23a_is_deterministic() {
    let a = orbaut(&["orbifold", "run", "--class", "23A", "--no-timings", "--threads", "1"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let v = json(&a);
    assert_eq!(v["aut_order"]["value"], "12144");
    assert_eq!(v["aut_order"]["factors"]["23"], 1);
    assert_eq!(v["im_mu_identification"], "Q_3(23)");
    assert!(!v["assumptions"].as_array().unwrap().is_empty());
    assert!(v.get("timings").is_none());
    let b = orbaut(&["orbifold", "run", "--class", "23A", "--no-timings", "--threads", "2"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn orbifold_without_assumptions() {
    let out = orbaut(&["orbifold", "run", "--class", "11A", "--no-assume-transitivity"]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["aut_order"].is_null());
    assert!(v["timings"].is_object());
}

#[test]
fn unknown_class_is_an_error() {
    let out = orbaut(&["orbifold", "run", "--class", "7B"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "unsupported");
}

#[test]
fn missing_cache_is_an_error() {
    let out = orbaut(&["leech", "find-class", "--class", "23A", "--cache", "/nonexistent/orbaut-cache"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["error"]["kind"], "cache");
    let env = Command::new(env!("CARGO_BIN_EXE_orbaut"))
        .args(["leech", "find-class", "--class", "23A"])
        .env("ORBIFOLD_CACHE", "/nonexistent/orbaut-cache")
        .output()
        .unwrap();
    assert_eq!(env.status.code(), Some(2));
}

#[test]
fn find_class_caches_and_reuses() {
    let dir = scratch_dir("cache");
    let d = dir.to_str().unwrap();
    let first = orbaut(&["leech", "find-class", "--class", "11A", "--cache", d]);
    assert!(first.status.success());
    let cached = dir.join("11A.json");
    let stored: Value = serde_json::from_str(&std::fs::read_to_string(&cached).unwrap()).unwrap();
    assert_eq!(stored["label"], "11A");
    assert_eq!(stored["invariants"]["coinv_rank"], 20);
    let second = Command::new(env!("CARGO_BIN_EXE_orbaut"))
        .args(["leech", "find-class", "--class", "11A"])
        .env("ORBIFOLD_CACHE", d)
        .output()
        .unwrap();
    assert_eq!(first.stdout, second.stdout);
    std::fs::write(&cached, "{}").unwrap();
    let broken = orbaut(&["leech", "find-class", "--class", "11A", "--cache", d]);
    assert_eq!(json(&broken)["error"]["kind"], "cache");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn lattice_info_and_output_file() {
    let dir = scratch_dir("lattice");
    let input = dir.join("a2.json");
    std::fs::write(&input, r#"{"rank": 2, "gram": [["2", "-1"], ["-1", "2"]]}"#).unwrap();
    let output = dir.join("out.json");
    let out = orbaut(&["lattice", "info", input.to_str().unwrap(), "--output", output.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(v["det"], "3");
    assert_eq!(v["rootless"], false);
    assert_eq!(v["root_pairs"], 3);
    assert_eq!(v["elementary_prime"], 3);
    std::fs::write(&input, r#"{"rank": 2, "gram": [["1", "2"], ["2", "1"]]}"#).unwrap();
    let bad = orbaut(&["lattice", "info", input.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn leech_build() {
    let out = orbaut(&["leech", "build"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["min_norm"], 4);
    assert_eq!(v["lattice"]["rank"], 24);
}
