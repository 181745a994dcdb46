use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cohsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#"{"grid": {"n_samples": 100}}"#);
    let out = dir.path().join("out");
    let o = cohsim(&[
        "simulate",
        "--config",
        &cfg,
        "--model",
        "m1",
        "--decimate",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("signal_M1.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_fs,field"));
    assert_eq!(lines.count(), 100);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("signal_M1.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["rows"], 100);
    assert_eq!(meta["config"]["grid"]["n_samples"], 100);
    assert_eq!(meta["config"]["model"], "m1");
}

#[test]
fn decimation_thins_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), r#"{"grid": {"n_samples": 100}, "model": "m2"}"#);
    let out = dir.path().join("out");
    let o = cohsim(&[
        "simulate",
        "--config",
        &cfg,
        "--decimate",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("signal_M2.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 15);
}

#[test]
fn reruns_produce_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        dir.path(),
        r#"{"grid": {"n_samples": 5000}, "m2": {"emission_rate": 0.002}, "emitters": 3, "max_lag_fs": 40}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        for cmd in ["simulate", "gamma", "psd"] {
            let o = cohsim(&[
                cmd,
                "--config",
                &cfg,
                "--seed",
                "17",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(
                o.status.success(),
                "{cmd}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
        }
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 12);
    for name in names {
        let (x, y) = (
            fs::read_to_string(a.join(&name)).unwrap(),
            fs::read_to_string(b.join(&name)).unwrap(),
        );
        if name.to_string_lossy().ends_with(".meta.json") {
            // Only the echoed output directory differs.
            let mut x: serde_json::Value = serde_json::from_str(&x).unwrap();
            let mut y: serde_json::Value = serde_json::from_str(&y).unwrap();
            x["config"]["out"] = serde_json::Value::Null;
            y["config"]["out"] = serde_json::Value::Null;
            assert_eq!(x, y, "{name:?}");
        } else {
            assert!(x == y, "{name:?} differs");
        }
    }
}

#[test]
fn zero_jump_rate_reports_ill_defined_fwhm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        dir.path(),
        r#"{"grid": {"n_samples": 100000}, "m1": {"jump_rate": 0.0}, "model": "m1"}"#,
    );
    let out = dir.path().join("out");
    let o = cohsim(&["gamma", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("l_fwhm_um=ILL_DEFINED"), "{s}");
    assert!(s.contains("fwhm_status=NO_CROSSING"), "{s}");
    let text = fs::read_to_string(out.join("gamma_M1.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("lag_fs,gamma,envelope"));
    assert_eq!(text.lines().count(), 1 + 40_001);
}

#[test]
fn psd_parseval_check_passes_on_a_signal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        dir.path(),
        r#"{"grid": {"n_samples": 4096}, "model": "m1", "emitters": 5}"#,
    );
    let out = dir.path().join("out");
    let o = cohsim(&[
        "psd",
        "--parseval",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains(" match"), "{s}");
    let text = fs::read_to_string(out.join("psd_M1.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("freq_cyc_per_fs,power"));
    assert_eq!(text.lines().count(), 1 + 2049);
}

#[test]
fn sweep_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(
        dir.path(),
        r#"{"grid": {"n_samples": 4000}, "emitter_counts": [1, 2, 5, 10], "replicates": 2, "max_lag_fs": 20}"#,
    );
    let out = dir.path().join("out");
    let o = cohsim(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out.join("sweep_rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 16);
    assert_eq!(
        fs::read_to_string(out.join("sweep_aggregate.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 8
    );
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("sweep_metadata.json")).unwrap())
            .unwrap();
    assert_eq!(meta["config"]["replicates"], 2);
}

#[test]
fn malformed_config_fails_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = small_config(dir.path(), r#"{"grid": {"n_samples": 100"#);
    let o = cohsim(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.json"));
    assert!(!out.exists());

    let cfg = small_config(dir.path(), r#"{"emiters": 3}"#);
    let o = cohsim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("emiters"));
}

#[test]
fn invalid_values_are_all_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = small_config(
        dir.path(),
        r#"{"grid": {"dt": 0.0}, "m2": {"sigma_period": -1.0}}"#,
    );
    let o = cohsim(&[
        "gamma",
        "--config",
        &cfg,
        "--decimate",
        "0",
        "--emitters",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.lines().filter(|l| l.starts_with("  - ")).count() >= 4,
        "{err}"
    );
    assert!(!out.exists());
}

#[test]
fn inputs_are_not_modified() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"grid": {"n_samples": 200}}"#;
    let cfg = small_config(dir.path(), body);
    let out = dir.path().join("out");
    let o = cohsim(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&cfg).unwrap(), body);
}
