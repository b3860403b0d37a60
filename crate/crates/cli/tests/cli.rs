use std::fs;
use std::process::Command;

fn hlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hlab"))
}

#[test]
fn collision_limit_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = hlab()
        .args(["collision-limit", "--n", "8", "--ladder", "2,3", "--output"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("collision-limit.csv")).unwrap();
    assert!(csv.starts_with("experiment,id,N,K,t,metric,value\n"));
    assert!(csv.contains("collision-limit,N3,3,2,0.0,main_minus_contact_hs,"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("collision-limit.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["ladder"]["big_n"], serde_json::json!([2, 3]));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "seed = 11\n[grid]\nn = 8\n[potential]\nbig_n = 2\n").unwrap();
    let out = hlab()
        .args(["simulate-nbody", "--t-final", "0.01", "--samples", "1", "--k-marginals", "1", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("nbody_marginal_1.hlab").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("simulate-nbody.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["seed"], 11);
    assert_eq!(manifest["config"]["time"]["t_final"], 0.01);
    assert!(manifest["summary"]["energy_moment_1"].is_number());
}

#[test]
fn invalid_ordering_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[weights]\nxi = 0.9\nxi_prime = 0.5\n").unwrap();
    let out = hlab().args(["picard", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn default_config_round_trips() {
    let out = hlab().arg("default-config").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[grid]"));
}
