use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semigroup-lab"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_config(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

/// Data rows of a CSV (schema comment and header skipped), split on commas.
fn rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# semigroup-lab "));
    lines.next().unwrap();
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write_config(dir: &Path, name: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value =
        serde_json::from_str(&std::fs::read_to_string(config(name)).unwrap()).unwrap();
    edit(&mut v);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn shipped_certificate(dir: &Path) -> PathBuf {
    let o = run_config(
        "witness",
        &config("witness-doubleexp.config.json"),
        dir,
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join("witness-doubleexp.cert.json")
}

#[test]
fn zero_generator_has_zero_error_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("limit-check", &config("zero.config.json"), dir.path(), &[]);
    assert_eq!(code(&o), 0);
    let r = rows(&dir.path().join("zero.limit.csv"));
    assert_eq!(r.len(), 21);
    assert!(r.iter().all(|row| row[9].parse::<f64>().unwrap() == 0.0));
}

#[test]
fn two_point_error_halves_and_tolerance_override_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("two-point.config.json");
    assert_eq!(code(&run_config("limit-check", &cfg, dir.path(), &[])), 0);
    let errs: Vec<f64> = rows(&dir.path().join("two-point.limit.csv"))
        .iter()
        .map(|r| r[9].parse().unwrap())
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.9..=2.1).contains(&ratio), "{ratio}");
    }
    assert_eq!(
        code(&run_config(
            "limit-check",
            &cfg,
            dir.path(),
            &["--tolerance", "1e-9"]
        )),
        1
    );
    assert_eq!(
        code(&run_config(
            "limit-check",
            &cfg,
            dir.path(),
            &["--tolerance", "0x1p-4"]
        )),
        0
    );
}

#[test]
fn bounded_dense_final_row_has_oracle_distance() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        "limit-check",
        &config("bounded-dense.config.json"),
        dir.path(),
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = rows(&dir.path().join("bounded-dense.limit.csv"));
    let (last, rest) = r.split_last().unwrap();
    assert!(rest.iter().all(|row| row[12].is_empty()));
    assert!(last[12].parse::<f64>().unwrap() < 1e-2);
}

#[test]
fn overflow_exits_3_and_keeps_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "two-point.config.json", |v| {
        v["generator"]["entries"][1] = serde_json::json!([1000, 0]);
        v["schedule"]["min_pow"] = 0.into();
        v["schedule"]["max_pow"] = 4.into();
    });
    let o = run_config("limit-check", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let r = rows(&dir.path().join("two-point.limit.csv"));
    assert!(!r.is_empty() && r.len() < 5, "{}", r.len());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.config.json");
    assert_eq!(
        code(&run_config("limit-check", &missing, dir.path(), &[])),
        2
    );
    let bad = dir.path().join("bad.config.json");
    std::fs::write(&bad, "{\"space\": {\"dim\": 2}}").unwrap();
    assert_eq!(code(&run_config("witness", &bad, dir.path(), &[])), 2);
    assert_eq!(code(&run(&["limit-check"])), 2);
    let o = bin()
        .args([
            "limit-check",
            "--config",
            config("zero.config.json").to_str().unwrap(),
        ])
        .arg("--out")
        .arg(dir.path())
        .env("SEMIGROUP_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn shipped_witness_builds_and_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cert = shipped_certificate(dir.path());
    let r = rows(&dir.path().join("witness-doubleexp.witness.csv"));
    assert_eq!(r.len(), 6);
    let m5: f64 = r[5][6].parse().unwrap();
    assert!(m5 >= 5f64.exp() - 0.2);
    assert_eq!(code(&run(&["verify", cert.to_str().unwrap()])), 0);
}

#[test]
fn forced_small_dimension_exits_4_with_hint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "witness-doubleexp.config.json", |v| {
        v["space"]["dim"] = 4.into()
    });
    let o = run_config("witness", &cfg, dir.path(), &[]);
    assert_eq!(code(&o), 4);
    let err = stderr(&o);
    assert!(err.contains("minimal needed |a_m phi_m|"), "{err}");
    assert!(err.contains("hint: increase space.dim"), "{err}");
}

#[test]
fn bounded_dense_witness_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        "witness",
        &config("witness-bounded-dense.config.json"),
        dir.path(),
        &[],
    );
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("truncation insufficient"));
}

#[test]
fn renorm_audit_reports_predicted_exceedance() {
    let dir = tempfile::tempdir().unwrap();
    let cert = shipped_certificate(dir.path());
    let o = run_config(
        "renorm-audit",
        &config("witness-doubleexp.config.json"),
        dir.path(),
        &["--certificate", cert.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ex = rows(&dir.path().join("witness-doubleexp.exceed.csv"));
    // lambda* = 1, 2, 3 against lambda_k ~ k - 1.18
    let first: Vec<&str> = ex.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(first, ["3", "4", "5"]);
    let report = dir.path().join("witness-doubleexp.report.json");
    assert_eq!(code(&run(&["verify", report.to_str().unwrap()])), 0);
}

#[test]
fn classical_audit_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        "renorm-audit",
        &config("renorm-classical.config.json"),
        dir.path(),
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = rows(&dir.path().join("renorm-classical.classical.csv"));
    assert_eq!((r[0][5].as_str(), r[0][6].as_str()), ("0", "0"));
}

fn tamper(cert: &Path, out: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(cert).unwrap()).unwrap();
    edit(&mut v);
    std::fs::write(out, serde_json::to_string(&v).unwrap()).unwrap();
    out.to_path_buf()
}

fn flip_last_digit(s: &str) -> String {
    let (mant, exp) = s.split_once('p').unwrap();
    let mut chars: Vec<char> = mant.chars().collect();
    let last = chars.last_mut().unwrap();
    *last = if *last == '1' { '3' } else { '1' };
    format!("{}p{exp}", chars.into_iter().collect::<String>())
}

#[test]
fn tampered_certificates_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cert = shipped_certificate(dir.path());

    let moved = tamper(&cert, &dir.path().join("moved.cert.json"), |v| {
        v["stages"][2]["x"][0][0] = Value::String("0x1.8p+0".into());
    });
    let o = run_config(
        "renorm-audit",
        &config("witness-doubleexp.config.json"),
        dir.path(),
        &["--certificate", moved.to_str().unwrap()],
    );
    assert_eq!(code(&o), 6, "{}", stderr(&o));

    let flipped = tamper(&cert, &dir.path().join("flipped.cert.json"), |v| {
        let s = v["final_values"][4]["value"][0]
            .as_str()
            .unwrap()
            .to_string();
        v["final_values"][4]["value"][0] = Value::String(flip_last_digit(&s));
    });
    let o = run(&["verify", flipped.to_str().unwrap()]);
    assert_eq!(code(&o), 6);
    assert!(
        stderr(&o).contains("first failing invariant: blow_up"),
        "{}",
        stderr(&o)
    );

    let empty = tamper(&cert, &dir.path().join("empty.cert.json"), |v| {
        v["stages"] = Value::Array(vec![])
    });
    let o = run(&["verify", empty.to_str().unwrap()]);
    assert_ne!(code(&o), 0);
    assert!(
        stderr(&o).contains("first failing invariant: structure"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn sweep_over_dimensions_records_each_point() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        "sweep",
        &config("sweep-doubleexp-dims.config.json"),
        dir.path(),
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = rows(&dir.path().join("sweep-doubleexp-dims.sweep.csv"));
    let codes: Vec<(&str, &str)> = r
        .iter()
        .map(|row| (row[0].as_str(), row[2].as_str()))
        .collect();
    assert_eq!(codes, [("4", "4"), ("32", "4"), ("64", "4"), ("96", "0")]);
    assert!(dir
        .path()
        .join("sweep-doubleexp-dims.d96.cert.json")
        .exists());
}
