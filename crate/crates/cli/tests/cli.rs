use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lindstab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn malformed_json_exits_2_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.json", "{\"experiment\": \"spectrum\",\n  \"model\": [");
    let out = tmp.path().join("out");
    let o = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    assert!(!out.exists());
}

#[test]
fn schema_and_field_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for body in [
        r#"{"experiment": "spectrum", "model": {}, "colour": 1}"#,
        r#"{"experiment": "spectrum"}"#,
        r#"{"experiment": "contraction", "model": {}, "t_grid": [2.0, 1.0]}"#,
        r#"{"experiment": "teleport"}"#,
    ] {
        let cfg = write(tmp.path(), "c.json", body);
        assert_eq!(code(&run(&["--config", cfg.to_str().unwrap()])), 2, "{body}");
    }
    assert_eq!(code(&run(&["--preset", "no-such-preset"])), 2);
}

#[test]
fn resource_ceiling_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "big.json",
        r#"{"experiment": "spectrum", "model": {"family": "amplitude-damping", "geometry": {"dim": 1, "extent": [9]}}}"#,
    );
    let o = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn numerical_failure_exits_1() {
    // pure dephasing has a degenerate stationary space, so no unique fixed point exists
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "deph.json",
        r#"{"experiment": "correlations", "model": {"family": "dephasing", "geometry": {"dim": 1, "extent": [2]}}, "region": [[0]], "region_b": [[1]]}"#,
    );
    assert_eq!(code(&run(&["--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn spectrum_writes_csv_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["--config", config("spectrum.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert!(csv.starts_with("k,re,im\n"));
    assert_eq!(csv.lines().count(), 1 + 64);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("spectrum.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["derived"]["gap"], 0.5);
    assert_eq!(summary["inputs"]["experiment"], "spectrum");
    assert!(summary["assertions"].as_array().unwrap().iter().all(|a| a["passed"] == true));
}

#[test]
fn json_format_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run(&["--preset", "example-spectra", "--format", "json", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let table: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("example-spectra.json")).unwrap()).unwrap();
    assert_eq!(table["header"][0], "example");
    assert_eq!(table["rows"].as_array().unwrap().len(), 4 + 16);
}

#[test]
fn stdout_csv_is_seed_deterministic() {
    let cfg = config("lr-verify.json");
    let cfg = cfg.to_str().unwrap();
    let a = run(&["--config", cfg, "--seed", "5", "--threads", "1"]);
    let b = run(&["--config", cfg, "--seed", "5", "--threads", "2"]);
    let c = run(&["--config", cfg, "--seed", "6"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert!(String::from_utf8_lossy(&a.stdout).starts_with("check,t,param,exact,bound\n"));
}

#[test]
fn every_shipped_config_parses() {
    for entry in std::fs::read_dir(config("")).unwrap() {
        let path = entry.unwrap().path();
        let bytes = std::fs::read(&path).unwrap();
        lindstab_cli::parse_config(&bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
