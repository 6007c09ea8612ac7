use std::path::Path;
use std::process::{Command, Output};

use hbcodebook::codebook::DesignArtifact;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbcodebook"))
        .args(args)
        .env_remove("HBCODEBOOK_WORKERS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_artifact(path: &Path) -> DesignArtifact {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn design_writes_artifact_with_expected_coherence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["design", "--nt", "64", "--lt", "8", "--mx", "4", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let art = read_artifact(&dir.path().join("design_proposed_nt64_lt8_mx4.json"));
    assert_eq!((art.n_t, art.l_t, art.m_x), (64, 8, 4));
    assert!((art.coherence - 0.31).abs() <= 0.02, "μ = {}", art.coherence);
    let mut ord = art.ordering.clone();
    ord.sort_unstable();
    assert_eq!(ord, (0..64).collect::<Vec<_>>());
    let rebuilt = art.to_design().unwrap();
    assert!((rebuilt.coherence.value() - art.coherence).abs() < 1e-12);
    assert!(dir.path().join("design_proposed_nt64_lt8_mx4.txt").exists());
}

#[test]
fn config_file_values_are_used_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(&cfg, "n_t = 16\nn_r = 4\nl_t = 4\nl_r = 2\nm_x = 2\n").unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "design",
        "--config",
        cfg.to_str().unwrap(),
        "--mx",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let art = read_artifact(&out.join("design_proposed_nt16_lt4_mx3.json"));
    assert_eq!(art.pilot_indices.len(), 3);
    assert_eq!(art.pilot_indices[0], 0);
}

#[test]
fn missing_config_names_the_path() {
    let o = run(&["design", "--config", "/nonexistent/cfg.toml"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("/nonexistent/cfg.toml"), "{}", stderr(&o));
}

#[test]
fn malformed_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "n_t = 16\nno_such_key = 1\n").unwrap();
    let o = run(&[
        "design",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no_such_key"), "{}", stderr(&o));
}

#[test]
fn invalid_dimensions_are_rejected() {
    let o = run(&["design", "--nt", "10", "--lt", "4"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_fails() {
    let o = run(&["design", "--frobnicate"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--frobnicate"));
}

#[test]
fn unwritable_output_fails_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("out");
    let o = run(&[
        "design",
        "--nt",
        "8",
        "--lt",
        "2",
        "--mx",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("blocker"), "{}", stderr(&o));
}

#[test]
fn nmse_sweep_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "--workers",
        "2",
        "nmse",
        "--axis",
        "snr",
        "--nt",
        "16",
        "--nr",
        "4",
        "--lt",
        "4",
        "--lr",
        "2",
        "--mx",
        "2",
        "--np",
        "2",
        "--trials",
        "5",
        "--snr-db",
        "-5,5",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("nmse_snr_db.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("axis,axis_value,cell,codebook"));
    // two SNR points for each of the two codebooks
    assert_eq!(lines.len(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("nmse_snr_db.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["target"], "nmse_snr_db");
    assert!(manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f["path"] == "nmse_snr_db.csv"));
}

#[test]
fn sample_config_matches_defaults() {
    let text = include_str!("../../../configs/default.toml");
    let cfg = hbcodebook::harness::SystemConfig::from_toml(text).unwrap();
    assert_eq!(cfg, hbcodebook::harness::SystemConfig::default());
}
