use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn ddsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddsim")).args(args).output().expect("binary runs")
}

fn ddsim_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddsim"))
        .env("DDSIM_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn sidecar(csv: &Path) -> Value {
    let text = fs::read_to_string(format!("{}.meta.json", csv.display())).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn si_p_sweep_has_point_count_plus_one_rows() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("udd2.csv");
    let out = ddsim(&[
        "simulate", "--protocol", "udd", "--level", "2", "--preset", "si-p", "--t-max", "2000", "--points", "200",
        "--nodes-eps", "2", "--nodes-nz", "2", "-o", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,F_x,F_y,F_z"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 201);
    assert!(rows[0].starts_with("0,"));
    assert!(rows[200].starts_with("2000,"));
    let meta = sidecar(&csv);
    assert_eq!(meta["metadata"]["rows"], 201);
    assert!((meta["config"]["b"].as_f64().unwrap() - 0.8804).abs() < 1e-4);
}

#[test]
fn metadata_records_logical_pulse_counts() {
    let dir = tempdir().unwrap();
    for (protocol, level, count) in [("qdd", "3", 20), ("qdd-zy", "4", 24), ("qdd-zy", "2", 8)] {
        let csv = dir.path().join(format!("{protocol}{level}.csv"));
        let out = ddsim(&[
            "simulate", "--protocol", protocol, "--level", level, "--t-max", "5", "--points", "3", "-o",
            csv.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert_eq!(sidecar(&csv)["metadata"]["pulse_count"], count);
    }
}

#[test]
fn reruns_are_bit_identical_across_thread_counts() {
    let args = [
        "simulate", "--protocol", "qdd-zy", "--level", "3", "--t-max", "20", "--points", "8", "--method",
        "monte_carlo", "--samples", "30000", "--seed", "5",
    ];
    let a = ddsim_threads("1", &args);
    let b = ddsim_threads("4", &args);
    let c = ddsim_threads("3", &args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let q1 = ddsim_threads("2", &["simulate", "--level", "3", "--points", "5"]);
    let q2 = ddsim_threads("5", &["simulate", "--level", "3", "--points", "5"]);
    assert_eq!(q1.stdout, q2.stdout);
}

#[test]
fn sidecar_feeds_back_as_config() {
    let dir = tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let out = ddsim(&[
        "simulate", "--protocol", "udd", "--level", "3", "--preset", "si-p", "--t-max", "30", "--points", "6",
        "--spacing", "log-with-zero", "--n0", "-0.05", "-o", first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let meta = format!("{}.meta.json", first.display());
    let out = ddsim(&["simulate", "--config", &meta, "-o", second.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    let (a, b) = (sidecar(&first), sidecar(&second));
    assert_eq!(a["metadata"], b["metadata"]);
    assert_eq!(a["config"]["n0"], -0.05);
}

#[test]
fn flags_override_config_file() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"protocol": "qdd", "level": 2, "points": 2, "t_max": 3.0}"#).unwrap();
    let csv = dir.path().join("out.csv");
    let out = ddsim(&["simulate", "--config", cfg.to_str().unwrap(), "--level", "3", "-o", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let meta = sidecar(&csv);
    assert_eq!(meta["config"]["level"], 3);
    assert_eq!(meta["metadata"]["pulse_count"], 20);
}

#[test]
fn unknown_config_key_is_rejected_by_name() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"protocol": "udd", "epsilon_zero": 0.3}"#).unwrap();
    let out = ddsim(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("epsilon_zero"), "{}", stderr(&out));
}

#[test]
fn invalid_values_name_the_key() {
    let out = ddsim(&["simulate", "--b", "-1"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("`b`"), "{}", stderr(&out));
    let out = ddsim(&["simulate", "--spacing", "cubic"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("spacing"), "{}", stderr(&out));
    let out = ddsim(&["simulate", "--preset", "gaas"]);
    assert!(stderr(&out).contains("preset"), "{}", stderr(&out));
}

#[test]
fn unwritable_output_fails() {
    let out = ddsim(&["simulate", "--points", "2", "-o", "/nonexistent-dir/x.csv"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("output"), "{}", stderr(&out));
}

#[test]
fn perfect_preset_gives_unit_fidelities() {
    let out = ddsim(&["simulate", "--preset", "perfect", "--protocol", "qdd", "--level", "4", "--points", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().skip(1) {
        for v in line.split(',').skip(1) {
            assert!((v.parse::<f64>().unwrap() - 1.0).abs() < 1e-9, "{line}");
        }
    }
}

#[test]
fn validate_reports_rows_and_exit_status() {
    let out = ddsim(&["validate", "--only", "0,4,8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("⟨ε²⟩/ε₀²: target 0.8"), "{text}");
    assert!(text.contains("zero-error QDD(ZY)-3 fidelities: target 1.0 within 1e-9"));
    assert!(text.contains("qdd-3 pulse count: target 20, computed 20, PASS"));

    let out = ddsim(&["validate", "--only", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("UDD-2 F_y saturation: target 0.88 ± 0.01"), "{text}");

    // QDD-4 F_x(0) = F_y(0) holds only to first order in the errors
    let out = ddsim(&["validate", "--only", "5"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("1 failed"));
}

#[test]
fn export_sequence_round_trips() {
    let out = ddsim(&["export-sequence", "--protocol", "qdd-zy", "--level", "3", "--t", "2.5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# protocol=qdd-zy level=3 total_time=2.5"));
    let seq = ddsim::PulseSequence::parse_text(&text).unwrap();
    assert_eq!(seq.pulse_count(), 20);
    assert!((seq.delay_sum() - 2.5).abs() < 1e-12);
}
