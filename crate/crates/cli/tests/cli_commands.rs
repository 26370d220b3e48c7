use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const SMALL: &str = "\
[population]
size = 400
active_users = 12

[schedule]
sessions = 6
swipes_per_session = 8
cooldown_window = 2
";

fn kpref(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpref"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

fn data_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

fn git_blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()));
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn simulate_writes_tables_and_hashed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    let res = kpref(&["simulate", "--config", &cfg, "--seed", "7"], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    assert_eq!(data_rows(&out.join("metrics.csv")), 6);
    assert_eq!(data_rows(&out.join("trace.csv")), 6 * 6 * 8);

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["config"]["population"]["size"], 400);
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), 2);
    for a in artifacts {
        let bytes = fs::read(out.join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["sha256"].as_str().unwrap(), git_blob_sha256(&bytes));
        assert_eq!(a["bytes"].as_u64().unwrap() as usize, bytes.len());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(kpref(&["simulate", "--config", &cfg], &a).status.success());
    assert!(kpref(&["simulate", "--config", &cfg, "--workers", "3"], &b).status.success());
    for name in ["metrics.csv", "trace.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn noise_sweep_covers_every_method_and_flip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("noise");
    let res = kpref(&["noise-sweep", "--config", &cfg], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(data_rows(&out.join("noise.csv")), 6 * 7);
    let svg = fs::read_to_string(out.join("fig_noise.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn adaptive_writes_trace_and_figure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("adaptive");
    let res = kpref(&["adaptive", "--config", &cfg], &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    // twice the sessions at half the length
    assert_eq!(data_rows(&out.join("trace_adaptive.csv")), 6 * 12 * 4);
    assert!(out.join("fig_alignment.svg").exists());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 3);
}

#[test]
fn decay_demo_table_and_step_limit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("decay");
    let res = kpref(&["decay-demo"], &out);
    assert!(res.status.success());
    assert_eq!(data_rows(&out.join("decay.csv")), 21);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["seed"].is_null());

    let res = kpref(&["decay-demo", "--steps", "60", "--dimension", "60"], &dir.path().join("too_many"));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("--steps"));
}

#[test]
fn bad_config_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[population]\nsize = 100\n\n[labels]\npflip = 0.3\n").unwrap();
    let res = kpref(&["simulate", "--config", path.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("bad.toml:5"), "{err}");

    fs::write(&path, "[labels]\np_flip = 1.5\n").unwrap();
    let res = kpref(&["simulate", "--config", path.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("labels.p_flip"));
}

#[test]
fn unwritable_output_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let res = kpref(&["decay-demo"], &blocker.join("sub"));
    assert_eq!(res.status.code(), Some(4));
}
