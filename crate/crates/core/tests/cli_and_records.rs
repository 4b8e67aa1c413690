use std::process::Command;

use atomic_mimo::harness::{
    emit_csv, parse_csv, run_capacity_sweep, BerRecord, CapacityRecord, ExperimentConfig,
    SweepOptions,
};

const BER_TOML: &str = r#"
[system]
kind = "PRSS"
n_tx = 2
k_rx = 4
modulation = "QAM4"

[detector]
kind = "ZF"

[sweep]
snr_grid_db = [0.0, 10.0]
min_errors = 20
max_trials = 2000
master_seed = 3
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_atomic-mimo"))
}

fn sample_record(snr: f64) -> BerRecord {
    BerRecord {
        snr_db: snr,
        ber: 0.0125,
        bit_errors: 25,
        bits_simulated: 2000,
        trials: 500,
        system: "PRSS".into(),
        detector: "ZF".into(),
        n_tx: 2,
        k_rx: 4,
        modulation: "QAM4".into(),
        seed: 9,
        config_hash: "ab12".into(),
        ci_half_width: BerRecord::confidence_half_width(25, 2000),
        comparability_group: "4b/2slot".into(),
        wall_time_s: 0.5,
    }
}

#[test]
fn ber_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let rows = vec![sample_record(0.0), sample_record(f64::INFINITY)];
    emit_csv(&rows, &path).unwrap();
    assert_eq!(parse_csv::<BerRecord>(&path).unwrap(), rows);
}

#[test]
fn empty_result_keeps_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.csv");
    emit_csv::<BerRecord>(&[], &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("snr_db,ber,bit_errors"));
    assert!(text.trim_end().ends_with("wall_time_s"));
    assert!(parse_csv::<BerRecord>(&path).unwrap().is_empty());
}

#[test]
fn capacity_csv_round_trip_with_missing_estimate() {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
[system]
kind = "PRSS"
n_tx = 2
k_rx = 2
modulation = "QAM4"
[sweep]
snr_grid_db = [0.0, 10.0]
[capacity]
channel = "rayleigh"
realizations = 4
"#,
    )
    .unwrap();
    let rows = run_capacity_sweep(&cfg, &SweepOptions::default()).unwrap();
    assert!(rows.iter().all(|r| r.mi_scalar_mc.is_none()));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    emit_csv(&rows, &path).unwrap();
    assert_eq!(parse_csv::<CapacityRecord>(&path).unwrap(), rows);
}

#[test]
fn hash_tracks_every_field() {
    let base = ExperimentConfig::from_toml_str(BER_TOML).unwrap();
    let same = ExperimentConfig::from_toml_str(BER_TOML).unwrap();
    assert_eq!(base.config_hash(), same.config_hash());
    for edit in [
        BER_TOML.replace("master_seed = 3", "master_seed = 4"),
        BER_TOML.replace("k_rx = 4", "k_rx = 5"),
        BER_TOML.replace("[0.0, 10.0]", "[0.0, 10.0, inf]"),
        BER_TOML.replace("kind = \"ZF\"", "kind = \"LMMSE\""),
    ] {
        let other = ExperimentConfig::from_toml_str(&edit).unwrap();
        assert_ne!(base.config_hash(), other.config_hash(), "{edit}");
    }
}

#[test]
fn cli_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b.toml");
    let out = dir.path().join("b.csv");
    std::fs::write(&cfg, BER_TOML).unwrap();
    let status = bin()
        .args(["ber", "--quiet", "--jobs", "2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rows: Vec<BerRecord> = parse_csv(&out).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[1].ber <= rows[0].ber);
    assert!(rows.iter().all(|r| r.seed == 3 && r.detector == "ZF"));
}

#[test]
fn cli_seed_override_changes_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b.toml");
    std::fs::write(&cfg, BER_TOML).unwrap();
    let out = bin()
        .args(["ber", "--quiet", "--seed", "11", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(10) == Some("11")));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();

    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["frobnicate"]), Some(1));
    assert_eq!(code(&["ber", "--config", "/nonexistent/x.toml"]), Some(1));
    assert_eq!(code(&["ber", "--jobs", "0", "--config", "x.toml"]), Some(1));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, BER_TOML.replace("[0.0, 10.0]", "[10.0, 0.0]")).unwrap();
    assert_eq!(code(&["ber", "--config", bad.to_str().unwrap()]), Some(1));

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, BER_TOML.replace("master_seed = 3", "master_seed = 3\nspeed = 1")).unwrap();
    assert_eq!(code(&["ber", "--config", unknown.to_str().unwrap()]), Some(1));

    // valid config, unwritable output
    let good = dir.path().join("good.toml");
    std::fs::write(&good, BER_TOML).unwrap();
    assert_eq!(
        code(&["ber", "--quiet", "--config", good.to_str().unwrap(), "--out", "/nonexistent/dir/o.csv"]),
        Some(2)
    );
}

#[test]
fn cli_validate_passes() {
    let out = bin().args(["validate", "--jobs", "2"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
}
