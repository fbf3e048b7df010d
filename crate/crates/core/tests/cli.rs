use std::process::{Command, Output};

use serde_json::Value;

fn carnot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carnot")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn malformed_brackets_exit_1_with_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    // [e1, e2] = e2 breaks the grading, so layer 2 is not generated
    std::fs::write(&path, r#"{"name": "bad", "layers": [2, 1], "brackets": [{"i": 1, "j": 2, "k": 2}]}"#).unwrap();
    let o = carnot(&["group-validate", "--group", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("FAIL") && out.contains("grading") && out.contains("stratification"), "{out}");
    // other commands refuse the file unless forced
    let o = carnot(&["group-product", "--group", path.to_str().unwrap(), "--point", "1,0,0", "--point", "0,1,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = carnot(&["group-product", "--force", "--group", path.to_str().unwrap(), "--point", "1,0,0", "--point", "0,1,0"]);
    assert_ne!(o.status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_2() {
    assert_eq!(carnot(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(carnot(&["subdiff", "--fn", "no-such-fn", "--point", "0,0,0"]).status.code(), Some(2));
    assert_eq!(carnot(&["subdiff", "--fn", "norm1", "--point", "0,0"]).status.code(), Some(2));
    assert_eq!(carnot(&["hconvex-check", "--fn", "norm1", "--tol", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(carnot(&["mvt", "--fn", "norm1", "--point", "0,0,0"]).status.code(), Some(2));
    assert_eq!(carnot(&["suite", "--group", "heisenberg:0"]).status.code(), Some(2));
}

#[test]
fn check_failures_exit_1() {
    let o = carnot(&["hconvex-check", "--fn", r#"{"polynomial": "-1*x1^2"}"#]);
    assert_eq!(o.status.code(), Some(1));
    // kinks have no certified gradient: a failed record, not a crash
    let o = carnot(&["second-fit", "--fn", "abs1", "--point", "0,0,0"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn verify_record_carries_five_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let o = carnot(&["verify-thm11", "--fn", "mixed", "--point", "0,0,0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let rec = &report["records"][0];
    let ids: Vec<&str> = rec["details"]["verdicts"].as_array().unwrap().iter().map(|v| v["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["equiv", "c1", "c2", "c3", "psd"]);
    assert_eq!(rec["inputs_digest"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("tau,residual,check_id"));
    assert_eq!(csv.lines().count() - 1, rec["curve"].as_array().unwrap().len());
    assert!(dir.path().join("summary.txt").exists());
}

#[test]
fn descriptor_files_and_function_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("h1.json");
    std::fs::write(&g, r#"{"name": "h1-file", "layers": [2, 1], "brackets": [{"i": 1, "j": 2, "k": 3}]}"#).unwrap();
    let f = dir.path().join("f.json");
    std::fs::write(&f, r#"{"composition": "max", "of": [{"builtin": "norm1"}, {"builtin": "quadratic"}]}"#).unwrap();
    let o = carnot(&["hconvex-check", "--group", g.to_str().unwrap(), "--fn", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let o = carnot(&["group-product", "--group", g.to_str().unwrap(), "--point", "1,0,0", "--point", "0,1,0", "--out", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    let product: Vec<f64> = serde_json::from_value(report["records"][0]["details"]["product"].clone()).unwrap();
    assert_eq!(product, [1.0, 1.0, 0.5]);
}

#[test]
fn fixed_seed_reports_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = carnot(&["subdiff", "--fn", "norm1", "--point", "0,0,0", "--seed", "7", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["report.json", "summary.txt", "curves.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}
