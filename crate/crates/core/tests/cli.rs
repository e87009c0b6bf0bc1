use serde_json::Value;
use std::process::Command;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn qlst(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qlst"));
    cmd.args(args).env_remove("QLST_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(qlst(&["--help"], &[]).code, 0);
    let v = qlst(&["--version"], &[]);
    assert_eq!(v.code, 0);
    assert!(v.stdout.starts_with("qlst "));
}

#[test]
fn analyze_reports_finite_fields() {
    let r = qlst(&["analyze", "--rho-db", "10", "--alpha", "4", "--beta", "40", "--tau", "0.07", "--a", "1", "--bits", "1"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r.stdout);
    let info = num(&v, "info");
    assert!(info > 0.0 && info <= 2.0, "{info}");
    for key in ["h_cond", "h_out", "rate_per_tx", "rate_per_rx"] {
        assert!(num(&v, key).is_finite(), "{key}");
    }
    for key in ["mse_g", "rho_bar", "sigma2_bar", "qtilde_x", "q_x"] {
        assert!(num(&v["solution"], key).is_finite(), "{key}");
    }
}

#[test]
fn zero_channel_mse_echoes_the_system() {
    let r = qlst(&["analyze", "--rho-db", "10", "--tau", "0.1", "--mse-g", "0"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let s = &json(&r.stdout)["solution"];
    assert!((num(s, "rho_bar") - 10.0).abs() < 1e-12);
    assert_eq!(num(s, "sigma2_bar"), 1.0);
}

#[test]
fn malformed_config_points_at_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"tau": 0.1, "simulation": {"n_trails": 5}}"#).unwrap();
    let r = qlst(&["analyze", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(r.code, 1);
    let e = json(&r.stderr);
    assert_eq!(e["error"], "config");
    assert_eq!(e["exit_code"], 1);
    assert_eq!(e["path"], "simulation.n_trails");
    assert!(e["message"].as_str().unwrap().contains("n_trails"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qlst(&["frobnicate"], &[]).code, 1);
    assert_eq!(qlst(&["analyze", "--alpha", "x"], &[]).code, 1);
    let r = qlst(&["analyze", "--alpha", "-1", "--tau", "0.1"], &[]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r.stderr)["error"], "invalid_argument");
    let r = qlst(&["preset", "fig99"], &[]);
    assert_eq!(r.code, 1, "{}", r.stderr);
}

#[test]
fn ser_lies_between_zero_and_three_quarters() {
    let r = qlst(&["ser", "--rho-db", "10", "--alpha", "5", "--tau-prime", "2", "--bits", "1"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let ser = num(&json(&r.stdout), "ser");
    assert!(ser > 0.0 && ser < 0.75, "{ser}");
}

#[test]
fn unreachable_rate_exits_three() {
    // 2a is only approached as α → ∞
    let r = qlst(&["optimize", "--target-rate", "2.0", "--a", "1", "--bits", "1", "--rho-db", "0"], &[]);
    assert_eq!(r.code, 3);
    let e = json(&r.stderr);
    assert_eq!(e["error"], "unreachable_target");
    assert_eq!(e["exit_code"], 3);
}

#[test]
fn simulation_is_byte_identical_across_runs_and_threads() {
    let args = ["simulate", "--seed", "7", "--n-trials", "100"];
    let a = qlst(&args, &[("QLST_THREADS", "1")]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    let b = qlst(&[&args[..], &["--threads", "3"]].concat(), &[]);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a.stdout);
    assert_eq!(v["n_trials"], 100);
    assert_eq!(v["seed"], 7);
}

#[test]
fn explain_round_trips_through_config() {
    let flags = ["--rho-db", "5", "--alpha", "2", "--tau", "0.05", "--bits", "2"];
    let direct = qlst(&[&["analyze"][..], &flags].concat(), &[]);
    assert_eq!(direct.code, 0, "{}", direct.stderr);
    let explained = qlst(&[&["analyze", "--explain"][..], &flags].concat(), &[]);
    assert_eq!(explained.code, 0);
    let cfg = json(&explained.stdout);
    assert_eq!(cfg["numerics"]["hermite_nodes"], 200);
    assert_eq!(cfg["numerics"]["solver"]["damping"], 0.5);
    assert_eq!(cfg["simulation"]["gamp"]["damping"], 0.7);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, &explained.stdout).unwrap();
    let replay = qlst(&["analyze", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(replay.stdout, direct.stdout);
}

#[test]
fn infinite_snr_is_accepted() {
    let r = qlst(&["analyze", "--rho-db", "inf", "--tau", "0.1", "--bits", "1"], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r.stdout);
    assert_eq!(v["rho"], "inf");
    assert!(num(&v, "info") > 0.0);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let r = qlst(&["ser", "--alpha", "5", "--out", path.to_str().unwrap()], &[]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(r.stdout.is_empty());
    assert!(num(&json(&std::fs::read_to_string(&path).unwrap()), "ser") > 0.0);
}
