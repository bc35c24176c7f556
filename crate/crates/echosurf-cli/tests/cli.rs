//! End-to-end checks of the command-line interface.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_echosurf"))
}

const TINY_SWEEP: &str = "\
[run]
seed = 5

[scenario]
ap_antennas = 2
atoms = 4
users = 1

[frame]
symbols = 28
dmrs_every = 4

[training]
max_outer_iters = 4
inner_steps = 1
washout = 2

[sweep]
atoms = 4
snr_db = 20
impairment = 0.3
csi_error = 0.5
trials = 2
methods = rc, model_based

[sounding]
pilot_len = 4
subset_size = 2
snr_db = 20
sweeps = 2
trials = 3
";

fn write_cfg(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("tiny.cfg");
    std::fs::write(&path, TINY_SWEEP).unwrap();
    path
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "sweep"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out_a.join("results.csv")).unwrap();
    let b = std::fs::read(out_b.join("results.csv")).unwrap();
    assert_eq!(a, b);
    assert!(out_a.join("summary.csv").exists());

    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(echosurf::report::RESULTS_HEADER));
    // one row per (point, trial, method)
    assert_eq!(text.lines().count(), 1 + 2 * 2);
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for (out, seed) in [(&out_a, "5"), (&out_b, "6")] {
        let status = bin()
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                seed,
                "sweep",
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(out_a.join("results.csv")).unwrap();
    let b = std::fs::read(out_b.join("results.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn simulate_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path());
    for method in ["rc", "model_based"] {
        let out = bin()
            .args([
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                dir.path().join("out").to_str().unwrap(),
                "simulate",
                "--method",
                method,
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("ber"), "{text}");
        assert!(text.contains("ee_bits_per_joule"), "{text}");
        assert!(text.contains(method), "{text}");
    }
}

#[test]
fn train_dumps_loss_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path());
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "train"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let trace = std::fs::read_to_string(out_dir.join("loss_trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,best_loss"));
    assert!(trace.lines().count() > 1);
}

#[test]
fn sound_writes_csv_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path());
    let out_dir = dir.path().join("out");
    let status = bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "sound"])
        .status()
        .unwrap();
    assert!(status.success());
    let raw = std::fs::read_to_string(out_dir.join("sounding.csv")).unwrap();
    assert!(raw.starts_with(echosurf::sweep::SOUNDING_RAW_HEADER));
    assert!(out_dir.join("sounding_summary.csv").exists());
}

#[test]
fn report_summarizes_sweep_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path());
    let out_dir = dir.path().join("out");
    assert!(bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "sweep"])
        .status()
        .unwrap()
        .success());
    let results = out_dir.join("results.csv");
    let out = bin()
        .args([
            "--out",
            out_dir.to_str().unwrap(),
            "report",
            "--input",
            results.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# method = rc"));
    assert!(text.contains("# method = model_based"));
    assert!(out_dir.join("summary.txt").exists());
}

#[test]
fn malformed_config_is_rejected_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "[scenario]\nap_antenas = 3\n").unwrap();
    let out = bin()
        .args(["--config", path.to_str().unwrap(), "simulate"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("ap_antenas"), "{err}");
}
