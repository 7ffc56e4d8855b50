//! End-to-end checks of the doa-bench binary.

use std::fs;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_doa-bench");

fn write_config(dir: &std::path::Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    let body = format!(
        r#"m = 8
q = 2
doas_deg = [50.0, 53.0]
snr_db = 5.0
num_snapshots = 40
source_model = "bpsk"
rank = 3
alpha = 0.998
delta = 5e-4
grid_step_deg = 1.0
assumed_q = 2
rng_seed = 9
{extra}
"#
    );
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn sweep_writes_curves_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "snapshot_sweep = [10, 20]\ntrials = 4");
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--estimators", "capon,jiso"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("curves.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "estimator,n_snapshots,resolved,trials,p_res"
    );
    assert_eq!(lines.count(), 4);
    assert!(out.join("plot.gp").exists());
}

#[test]
fn sweep_is_worker_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "snapshot_sweep = [10, 20]\ntrials = 6");
    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let out = dir.path().join(format!("out{workers}"));
        let status = Command::new(BIN)
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--estimators", "capon,music", "--workers", workers])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(out.join("curves.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn spectrum_writes_normalized_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let status = Command::new(BIN)
        .args(["spectrum", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--estimators", "capon"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("spectrum_capon.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "theta_deg,power_db");
    let mut max_db = f64::MIN;
    let mut count = 0;
    for line in lines {
        let (_, db) = line.split_once(',').unwrap();
        max_db = max_db.max(db.parse::<f64>().unwrap());
        count += 1;
    }
    assert_eq!(count, 179);
    assert!(max_db.abs() < 1e-12, "spectrum not normalized to 0 dB");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "mystery_knob = 1");
    let output = Command::new(BIN)
        .args(["sweep", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("mystery_knob") || stderr.contains("unknown"), "{stderr}");
}

#[test]
fn selftest_passes() {
    let output = Command::new(BIN)
        .args(["selftest", "--seed", "5"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
}
