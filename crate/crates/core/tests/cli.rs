use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_migrasim"));
    c.env("MIGRASIM_THREADS", "1");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn migrasim")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("migrasim-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn docs_threshold_prints_four_thirds() {
    let o = run(&["threshold", "--variant", "docs", "--mu", "1", "--alpha", "1", "--beta", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1.3333333333333333");
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let o = run(&["threshold", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn invalid_parameter_exits_one() {
    let o = run(&["analytic", "--p", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p out of range"));
}

#[test]
fn audit_output_is_reproducible() {
    let args = ["audit", "--variant", "sis", "--p", "0.5", "--eta", "1", "--events", "1e6", "--seed", "42"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let rows: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert!(!rows.is_empty());
    for r in rows {
        for key in ["name", "lhs", "rhs", "residual", "se", "pass"] {
            assert!(r.get(key).is_some(), "missing {key} in {r}");
        }
    }
}

#[test]
fn sweep_csv_schema_and_manifest_round_trip() {
    let d = scratch("sweep");
    let out = d.join("fig5.csv");
    let o = run(&[
        "sweep", "--variant", "sis", "--sweep", "alpha", "--grid", "0.5:20:log3", "--mu", "1", "--beta", "1", "--budget", "1e5",
        "--precision", "0.2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,eta_c_sis,eta_c_sis_se,eta_c_docs,eta_c_air"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!((rows[0][0], rows[2][0]), (0.5, 20.0));
    assert!((rows[2][3] - 23.0 / 60.0).abs() < 1e-12);
    let manifest = d.join("manifest.json");
    let again = d.join("again.csv");
    let o = run(&["sweep", "--config", manifest.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
    fs::remove_dir_all(d).ok();
}

#[test]
fn flags_override_config_file() {
    let d = scratch("config");
    let cfg = d.join("c.json");
    fs::write(&cfg, r#"{"variant": "docs", "mu": 1.0, "alpha": 20.0, "beta": 1.0}"#).unwrap();
    let o = run(&["threshold", "--config", cfg.to_str().unwrap()]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 23.0 / 60.0).abs() < 1e-12);
    let o = run(&["threshold", "--config", cfg.to_str().unwrap(), "--alpha", "1"]);
    assert_eq!(stdout(&o).trim(), "1.3333333333333333");
    fs::remove_dir_all(d).ok();
}

#[test]
fn closed_network_csv_schemas() {
    let o = run(&["closed", "--variant", "sis", "--n", "10", "--eta", "2", "--time", "5", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("t,total_infected,mean_x,mean_y"));
    for l in text.lines().skip(1) {
        let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((f[2] + f[3] - 2.0).abs() < 1e-12, "{l}");
    }
    let o = run(&["closed", "--n", "10", "--eta", "2", "--extinction", "--reps", "3", "--cap", "1e4"]);
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("rep,absorption_time,censored"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn coupling_summary_reports_no_violation() {
    let o = run(&["couple", "--kind", "beta", "--closed-n", "10", "--events", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["violations"], 0);
}

#[test]
fn derivative_sweep_schema() {
    let o = run(&["sweep", "--quantity", "g-prime0", "--sweep", "mu", "--grid", "0.5,1,2", "--eta", "1", "--budget", "1e4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("mu,g_prime0,g_prime0_se"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn non_increasing_grid_is_rejected() {
    let o = run(&["sweep", "--sweep", "alpha", "--grid", "2,1", "--variant", "docs"]);
    assert_eq!(o.status.code(), Some(1));
}
