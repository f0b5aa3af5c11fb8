use std::str::FromStr;

use mpdlab::config::{parse_config_str, ExperimentConfig};
use mpdlab::experiment::{error_payload, run, Command, RunOptions, SpectrumPayload, ValidateReport};
use mpdlab::fuchsian::translation_length;
use mpdlab::Error;

fn opts(dir: &tempfile::TempDir, csv: bool) -> RunOptions {
    RunOptions {
        out_dir: Some(dir.path().to_path_buf()),
        csv,
    }
}

#[test]
fn unknown_command_is_a_usage_error() {
    let e = Command::from_str("spectra").unwrap_err();
    assert_eq!(e.kind(), "usage");
    let v = error_payload(&e, Some("spectra"));
    assert_eq!(v["error"]["kind"], "usage");
    for c in Command::ALL {
        assert_eq!(Command::from_str(c.name()).unwrap(), c);
    }
}

#[test]
fn base_spectrum_has_unit_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(r#"{"group": {"preset": "genus2-octagon"}, "depth": 2}"#, &[]).unwrap();
    let out = run(Command::Spectrum, &cfg, &opts(&dir, true)).unwrap();
    let sp: SpectrumPayload = serde_json::from_value(out.envelope.payload.clone()).unwrap();
    assert!(sp.failures.is_empty(), "{:?}", sp.failures);
    assert!(sp.entries.len() >= 8);
    let group = cfg.group().unwrap();
    for e in &sp.entries {
        assert!((e.lambda - 1.0).abs() <= 1e-8, "{} lambda {}", e.word, e.lambda);
        let ell = translation_length(&group.evaluate_class(&group.parse_class(&e.word).unwrap())).unwrap();
        assert!((e.length - ell).abs() <= 1e-8 * ell);
    }
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "word,length,log_mpd,lambda,route_discrepancy");
    assert_eq!(csv.lines().count(), sp.entries.len() + 1);
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(written["config_hash"], cfg.hash());
    assert_eq!(written["numerics"], serde_json::to_value(&cfg.numerics).unwrap());
}

#[test]
fn same_config_gives_identical_payloads() {
    let text = r#"{"perturbation": {"kind": "conformal", "random": {"count": 2, "amplitude": 0.05}},
                   "classes": ["ab", "aC"], "seed": 11}"#;
    let cfg = parse_config_str(text, &[]).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run(Command::Spectrum, &cfg, &opts(&a, false)).unwrap().envelope;
    // second run in the same directory reads the geodesic cache
    let cached = run(Command::Spectrum, &cfg, &opts(&a, false)).unwrap().envelope;
    let fresh = run(Command::Spectrum, &cfg, &opts(&b, false)).unwrap().envelope;
    let bytes = |e: &mpdlab::experiment::ResultEnvelope| serde_json::to_string(&e.payload).unwrap();
    assert_eq!(bytes(&first), bytes(&cached));
    assert_eq!(bytes(&first), bytes(&fresh));
    assert_eq!(first.config_hash, fresh.config_hash);
}

#[test]
fn validate_passes_on_base_metric() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(r#"{"depth": 1, "numerics": {"grid": [8, 8]}}"#, &[]).unwrap();
    let out = run(Command::Validate, &cfg, &opts(&dir, false)).unwrap();
    let r: ValidateReport = serde_json::from_value(out.envelope.payload).unwrap();
    let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).collect();
    assert_eq!(r.failed, 0, "{failed:?} {:?}", r.errors);
    assert!(r.passed >= 10);
    assert!(out.envelope.success);
}

#[test]
fn validate_reports_measured_and_bound() {
    let dir = tempfile::tempdir().unwrap();
    // a strong positive bump breaks the curvature sign
    let text = r#"{"depth": 1, "numerics": {"grid": [6, 6]},
                   "perturbation": {"kind": "conformal", "bumps": [{"center": [0.0, 1.0], "radius": 1.0, "amplitude": 40.0}]}}"#;
    let cfg = parse_config_str(text, &[]).unwrap();
    let out = run(Command::Validate, &cfg, &opts(&dir, false)).unwrap();
    assert!(!out.envelope.success);
    let r: ValidateReport = serde_json::from_value(out.envelope.payload).unwrap();
    assert!(r.failed >= 1);
    let bad = r.errors.iter().any(|f| f.word == "negative_curvature" && f.kind == "curvature_sign")
        || r.checks.iter().any(|c| c.name == "negative_curvature" && !c.passed && c.measured > c.bound);
    assert!(bad, "{r:?}");
}

#[test]
fn commands_needing_a_direction_refuse_without_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let e = run(Command::Xray, &cfg, &opts(&dir, false)).unwrap_err();
    assert!(matches!(e, Error::Config { ref path, .. } if path == "tangent"));
}

#[test]
fn export_writes_xy_tables() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"classes": ["ab"], "numerics": {"grid": [3, 4]},
                   "perturbation": {"kind": "conformal", "bumps": [{"center": [0.0, 1.0], "radius": 0.8, "amplitude": 0.05}]}}"#;
    let cfg = parse_config_str(text, &[]).unwrap();
    let out = run(Command::Export, &cfg, &opts(&dir, false)).unwrap();
    assert_eq!(out.files.len(), 4);
    for name in ["field.csv", "curvature.csv"] {
        let t = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(t.lines().next().unwrap(), "x,y,value");
        assert!(t.lines().count() > 10);
    }
    let g = std::fs::read_to_string(dir.path().join("geodesics.csv")).unwrap();
    assert_eq!(g.lines().next().unwrap(), "word,t,x,y,theta");
}

#[test]
fn kappa_and_entropy_on_base_metric() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(
        r#"{"numerics": {"grid": [4, 4], "fiber": 4, "birkhoff_time": 100, "birkhoff_discard": 10}}"#,
        &[],
    )
    .unwrap();
    let k = run(Command::Kappa, &cfg, &opts(&dir, false)).unwrap().envelope.payload;
    assert!((k["kappa"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let h = run(Command::Entropy, &cfg, &opts(&dir, false)).unwrap().envelope.payload;
    assert!((h["entropy"]["space"].as_f64().unwrap() - 1.0).abs() < 1e-3);
    assert!((h["entropy"]["birkhoff"].as_f64().unwrap() - 1.0).abs() < 1e-3);
}
