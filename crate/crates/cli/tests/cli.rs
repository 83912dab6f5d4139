use std::path::Path;
use std::process::{Command, Output};

fn escapeflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_escapeflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_prints_blowup_time_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = escapeflow(&["simulate", "--f", "-exp(-z)", "--z0", "0", "--kind", "holo", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "FiniteTimeBlowup T≈1.0000");
    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,re_z,im_z,abs_z,step_error"));
    let rows = lines.count();
    let traj: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("trajectory.json")).unwrap()).unwrap();
    assert_eq!(rows, traj["samples"].as_array().unwrap().len());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate", "--f", "z/(z+1)", "--z0", "0"],
        vec!["simulate", "--z0", "0"],
        vec!["simulate", "--f", "z^2", "--z0", "1", "--tol", "-1"],
        vec!["simulate", "--f", "7", "--z0", "1"],
        vec!["bogus"],
        vec!["simulate", "--f", "z", "--z0", "1,2,3"],
        vec!["poly-summary", "--f", "exp(z)"],
    ] {
        let o = escapeflow(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // g has a critical point at the start
    let o = escapeflow(&["level-trace", "--G", "z^2", "--start", "0", "--Xmax", "1"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("LevelError"));
}

#[test]
fn transit_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = escapeflow(&["transit", "--G", "z^3 * (1/3)", "--start", "1", "--Xmax", "1e6"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("transit.json")).unwrap()).unwrap();
    // X from 1/3 to 1e6: exact transit 1 - (3e6)^(-1/3)
    let exact = 1.0 - 3e6f64.powf(-1.0 / 3.0);
    assert!((r["quadrature_time"].as_f64().unwrap() - exact).abs() < 1e-8);
    assert!(r["relative_gap"].as_f64().unwrap() <= 1e-3);
    for key in ["x_range", "quadrature_time", "ode_time", "relative_gap"] {
        assert!(r.get(key).is_some(), "{key}");
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["simulate", "--f", "z^2 - 1", "--z0", "0.3,0.4", "--svg", "--json", "--tmax", "5"],
        &["measure", "--f", "-exp(-z)", "--z0", "0", "--N", "64", "--seed", "11", "--svg", "--tmax", "20"],
        &["rubel", "--f", "exp(z)", "--z0", "2", "--tend", "1e12", "--svg"],
    ];
    for args in runs {
        assert_eq!(escapeflow(args, a.path()).status.code(), Some(0));
        assert_eq!(escapeflow(args, b.path()).status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 7);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?}");
    }
}

#[test]
fn poly_summary_and_classify() {
    let dir = tempfile::tempdir().unwrap();
    let o = escapeflow(&["poly-summary", "--g", "z^2", "--kind", "antiholo"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("finite_time=true"));
    let o = escapeflow(&["poly-summary", "--g", "z", "--kind", "antiholo", "--json"], dir.path());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["finite_time"], false);
    let o = escapeflow(&["classify", "--f", "1i*z", "--z0", "1"], dir.path());
    assert!(stdout(&o).starts_with("Periodic period≈6.2832"));
    let c: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("classification.json")).unwrap()).unwrap();
    assert_eq!(c["termination"]["class"], "Periodic");
}

#[test]
fn demo_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = escapeflow(&["demo", "paper"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
