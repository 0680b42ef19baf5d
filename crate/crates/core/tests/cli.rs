//! Drives the `aptransport` binary end to end.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aptransport"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_config(dir: &Path, json: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, json).unwrap();
    let out = dir.join("out");
    let mut args = vec!["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bin(&args)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn summary(m: &Value, key: &str) -> f64 {
    m["summary"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e[0] == key)
        .unwrap_or_else(|| panic!("no summary entry {key}"))[1]
        .as_f64()
        .unwrap()
}

fn csv_max(path: &Path) -> f64 {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn list_kinds_names_all_eight() {
    let o = bin(&["list-kinds"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("amplification-check"));
}

#[test]
fn print_defaults_is_a_runnable_config() {
    let o = bin(&["print-defaults", "aligned-run"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["nx"], 201);
    assert_eq!(v["n_steps"], 100);
    assert_eq!(bin(&["print-defaults", "nonsense"]).status.code(), Some(1));
}

#[test]
fn config_errors_exit_one_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(tmp.path(), r#"{"kind": "aligned-run", "nx": -3}"#, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nx"));
    let o = run_config(tmp.path(), r#"{"kind": "aligned-run", "colour": 1}"#, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let o = bin(&["run", tmp.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(
        tmp.path(),
        r#"{"kind": "aligned-run", "nx": 17, "ny": 17, "n_steps": 2, "eps": [0]}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("imex"));
}

#[test]
fn aligned_run_defaults_damp_below_the_exact_peak() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(tmp.path(), r#"{"kind": "aligned-run"}"#, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    let peak = csv_max(&out.join("imex_eps1e0_step00100.csv"));
    assert!(peak > 1.5 && peak < 2.0, "peak {peak}");

    let m = manifest(&out);
    for key in ["config", "outputs", "wall_time_s", "version"] {
        assert!(m.get(key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(m["config"]["kind"], "aligned-run");
    for e in m["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(out.join(e["path"].as_str().unwrap())).unwrap();
        assert_eq!(
            e["sha256"].as_str().unwrap(),
            aptransport::experiments::output::sha256_hex(&bytes)
        );
    }
    let plot = std::fs::read_to_string(out.join("plot.gp")).unwrap();
    assert!(plot.contains("imex_eps1e0_step00100.csv"));
}

#[test]
fn point_trace_fourier_damps_slowest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(tmp.path(), r#"{"kind": "point-trace"}"#, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&tmp.path().join("out"));
    for eps in ["1e0", "1e-1", "1e-2"] {
        let fourier = summary(&m, &format!("fourier_eps{eps}:damping_rate"));
        assert!(fourier > 0.0);
        for other in ["imex", "micro-macro", "lagrange"] {
            let r = summary(&m, &format!("{other}_eps{eps}:damping_rate"));
            assert!(fourier < r, "eps {eps}: fourier {fourier} vs {other} {r}");
        }
    }
}

#[test]
fn cond_sweep_imp_slope() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_config(tmp.path(), r#"{"kind": "cond-sweep"}"#, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&tmp.path().join("out"));
    let s = summary(&m, "imp:slope");
    assert!((-1.1..=-0.9).contains(&s), "imp slope {s}");
}

#[test]
fn batch_runs_in_parallel_into_subdirectories() {
    let tmp = tempfile::tempdir().unwrap();
    let batch = r#"[
        {"kind": "aligned-run", "nx": 17, "ny": 17, "n_steps": 5},
        {"kind": "stability-scan", "name": "scan", "nx": 9, "ny": 9},
        {"kind": "rotating-run", "nx": 16, "ny": 16, "n_steps": 4, "t_final": 0.0625}
    ]"#;
    let o = run_config(tmp.path(), batch, &["--workers", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = tmp.path().join("out");
    for leaf in ["00-aligned-run", "scan", "02-rotating-run"] {
        assert!(out.join(leaf).join("manifest.json").is_file(), "{leaf}");
    }

    let dup = r#"[{"kind": "aligned-run", "name": "a"}, {"kind": "point-trace", "name": "a"}]"#;
    assert_eq!(run_config(tmp.path(), dup, &[]).status.code(), Some(1));
}
