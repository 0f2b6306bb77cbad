// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dressed_lasing::dressed::transmission_peaks;
use dressed_lasing::units::to_hz;
use dressed_lasing_cli::parse_str;

const TRIPLET: &str = "\
n_atoms = 62500
g_khz = 7.5
kappa_khz = 150.0
gamma_khz = 7.5
delta_mhz = 2.0
drive_shape = \"gaussian\"
drive_amp_sqrt_khz = 10.0
drive_sigma_ns = 26.4
drive_center_ns = 264.1
";

const LASING: &str = "\
n_atoms = 250000
g_khz = 7.5
kappa_khz = 150.0
gamma_khz = 7.5
eta_over_gamma = 1.0
delta_mhz = 0.1
";

fn bin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dressed-lasing"))
        .args(args)
        .current_dir(dir)
        .env_remove("DRESSED_LASING_OUT")
        .output()
        .unwrap()
}

fn csv_column(path: &Path, col: usize) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap().to_string())
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(bin(&["frobnicate"], tmp.path()).status.code(), Some(2));
    fs::write(tmp.path().join("bad.toml"), "kapa_khz = 150.0\n").unwrap();
    let out = bin(&["--config", "bad.toml", "lase"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa_khz"));
    // transmit needs a pulse.
    fs::write(tmp.path().join("undriven.toml"), LASING).unwrap();
    assert_eq!(bin(&["--config", "undriven.toml", "transmit"], tmp.path()).status.code(), Some(2));
}

#[test]
fn dressed_peaks_match_library() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), TRIPLET).unwrap();
    let out = bin(&["--config", "c.toml", "dressed", "--peaks", "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cfg = parse_str(TRIPLET).unwrap();
    let expected: Vec<f64> = transmission_peaks(&cfg.params, cfg.max_n)
        .iter()
        .map(|p| to_hz(p.frequency_offset))
        .collect();
    let got: Vec<f64> = csv_column(&tmp.path().join("o/dressed_peaks.csv"), 0)
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn transmit_writes_listed_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), TRIPLET).unwrap();
    let out = bin(&["--config", "c.toml", "--log", "transmit"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    let m = manifest(&dir);
    assert_eq!(m["command"], "transmit");
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for o in outputs {
        assert!(fs::metadata(dir.join(o.as_str().unwrap())).unwrap().len() > 0);
    }
    let header = fs::read_to_string(dir.join("transmission.csv")).unwrap();
    assert!(header.starts_with("offset_hz,intensity,phase_rad,log10_intensity\n"));
    assert_eq!(csv_column(&dir.join("transmission_peaks.csv"), 0).len(), 3);
}

#[test]
fn snapshot_reproduces_run_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), LASING).unwrap();
    assert!(bin(&["--config", "c.toml", "lase", "--out", "a"], tmp.path()).status.success());
    let snap = manifest(&tmp.path().join("a"))["config_snapshot"].as_str().unwrap().to_string();
    fs::write(tmp.path().join("snap.toml"), snap).unwrap();
    assert!(bin(&["--config", "snap.toml", "lase", "--out", "b"], tmp.path()).status.success());
    let a = fs::read(tmp.path().join("a/lase.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/lase.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn verify_passes_and_records_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["verify", "--out", "v"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = csv_column(&tmp.path().join("v/verify.csv"), 4);
    assert_eq!(results.len(), 4);
    assert!(results.iter().all(|r| r == "PASS"));
}
