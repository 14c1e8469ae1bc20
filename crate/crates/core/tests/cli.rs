use std::path::Path;
use std::process::{Command, Output};

use ehcurv::report::canonical_json;
use serde_json::Value;

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ehcurv"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn einstein_check_passes_at_the_root() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["check-einstein", "--metric", "page"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(dir.path());
    assert!(r["sections"]["einstein"]["max"].as_f64().unwrap() < 1e-5);
    assert!(dir.path().join("field_einstein_residual.csv").exists());
}

#[test]
fn einstein_check_fails_off_the_root() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["check-einstein", "--metric", "page", "--a", "0.5", "--grid", "4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let r = report(dir.path());
    let failed: Vec<&Value> = r["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert!(!failed.is_empty());
    for c in failed {
        assert!(c["location"].is_array(), "failed check without a witness: {c}");
    }
}

#[test]
fn bisectional_scan_finds_negativity_on_page() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["scan-bisec", "--metric", "page", "--grid", "6"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    assert!(r["sections"]["bisectional"]["min"].as_f64().unwrap() < 0.0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS bisectional_negative"));
}

#[test]
fn fubini_study_holomorphic_sectional_column_is_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["scan-bisec", "--metric", "fs", "--grid", "4", "--sphere-points", "20"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("field_holomorphic_sectional.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,theta,phi,psi,value"));
    let mut rows = 0;
    let mut previous: Option<Vec<f64>> = None;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert!((cols[4] - 4.0).abs() < 1e-6, "{line}");
        if let Some(p) = &previous {
            assert!(p[..4] < cols[..4], "rows out of grid order");
        }
        previous = Some(cols);
        rows += 1;
    }
    assert_eq!(rows, 4usize.pow(4));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_file = dir.path().join("bad.json");
    std::fs::write(&bad_file, r#"{"metric": "page", "gird": 3}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["check-einstein", "--metric", "klein-bottle"],
        vec!["check-einstein", "--metric", "s4", "--a", "0.3"],
        vec!["check-einstein", "--grid", "1"],
        vec!["check-einstein", "--format", "xml"],
        vec!["check-einstein", "--config", bad_file.to_str().unwrap()],
        vec!["check-everything"],
        vec!["check-estimates", "--metric", "s4", "--grid", "3"],
    ];
    for args in cases {
        let o = run(&args, &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cfg.json");
    std::fs::write(&file, r#"{"metric": "t4", "grid": 3, "seed": 4, "format": ["json"]}"#).unwrap();
    let o = run(&["check-einstein", "--config", file.to_str().unwrap(), "--grid", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["config"]["grid"], 2);
    assert_eq!(r["config"]["seed"], 4);
    assert!(!dir.path().join("field_einstein_residual.csv").exists());
}

#[test]
fn reports_are_reproducible_under_a_fixed_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["scan-ortho-bisec", "--metric", "page", "--grid", "4", "--sphere-points", "30", "--seed", "7"];
    run(&args, a.path());
    run(&args, b.path());
    let read = |d: &Path| std::fs::read_to_string(d.join("report.json")).unwrap();
    let (ja, jb) = (read(a.path()), read(b.path()));
    // Paths differ between the two runs; normalise the echoed output dir.
    let norm = |s: &str, d: &Path| canonical_json(&s.replace(d.to_str().unwrap(), "OUT")).unwrap();
    assert_eq!(norm(&ja, a.path()), norm(&jb, b.path()));
    let csv = |d: &Path| std::fs::read(d.join("field_orthogonal_bisectional_min.csv")).unwrap();
    assert_eq!(csv(a.path()), csv(b.path()));
}

#[test]
fn report_all_skips_sections_a_metric_lacks() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report-all", "--metric", "s4", "--grid", "3", "--sphere-points", "10"], dir.path());
    let r = report(dir.path());
    let skipped: Vec<String> = r["skipped"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap().to_string())
        .collect();
    assert!(skipped.iter().any(|s| s.starts_with("scan-bisec")), "{skipped:?}");
    assert!(skipped.iter().any(|s| s.starts_with("check-estimates")), "{skipped:?}");
    assert!(r["sections"]["einstein"].is_object());
    assert!(r["sections"]["weitzenbock"].is_object());
    // The S4 contrast surface is flat, so its contrast check fails.
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let o = Command::new(env!("CARGO_BIN_EXE_ehcurv")).arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["check-einstein", "scan-bisec", "normal-bundle", "report-all"] {
        assert!(text.contains(sub), "{sub}");
    }
}
