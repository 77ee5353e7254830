use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dissipative_dynamics::io::CASE_STUDY_DOCUMENT;

fn ddyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddyn"))
        .args(args)
        .output()
        .expect("ddyn runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_model(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn wedge_reports_efficiencies_and_impedance() {
    let o = ddyn(&["wedge", "--mu", "0.2", "--alpha-deg", "45"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("eta_f = 0.8\n"));
    assert!(text.contains("eta_b = 0.833333333\n"));
    assert!(text.contains("impedance_fwd = 3.25\n"));
    assert!(text.contains("impedance_bwd = 3.4\n"));
}

#[test]
fn locked_wedge_prints_locked() {
    let o = ddyn(&["wedge", "--mu", "0.5", "--alpha-deg", "70"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("impedance_fwd = locked"));
}

#[test]
fn case_study_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = ddyn(&["case-study", "--out-dir", out.to_str().unwrap(), "--svg"]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["git.csv", "fc.csv", "sweep.csv", "git.svg", "fc.svg", "sweep.svg"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 52);
    assert!(sweep.starts_with("eta_f,eta_b,fc_fwd_norm,fc_bwd_norm,imf\n1,1,1,1,"));
}

#[test]
fn sweep_and_analyze_on_a_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "leg.model", CASE_STUDY_DOCUMENT);
    let o = ddyn(&["sweep", &model, "--eta-f", "0.8:1:0.1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("eta_f,eta_b,fc_fwd_norm,fc_bwd_norm,imf"));
    assert_eq!(text.lines().count(), 4);

    let o = ddyn(&["analyze", &model, "--mode", "bwd", "--metrics", "git,imf"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("conventional,"));
    assert!(text.contains("backward,"));
    assert!(!text.contains("forward,"));
    assert!(text.contains("imf,nx,nz\n"));
}

#[test]
fn simulate_prints_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "leg.model", CASE_STUDY_DOCUMENT);
    let tau = write_model(dir.path(), "tau.csv", "0, 0.1, 0.1\n");
    let o = ddyn(&["simulate", &model, "--steps", "10", "--record-every", "5", "--tau", &tau]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("t,q1,q2,q3,q4,q5,qd1,"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn missing_model_exits_2() {
    let o = ddyn(&["analyze", "/nonexistent/leg.model"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn malformed_topology_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = CASE_STUDY_DOCUMENT.replace("    0, 1\n", "    0\n");
    let model = write_model(dir.path(), "bad.model", &text);
    let o = ddyn(&["analyze", &model]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn singular_topology_in_a_document_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = CASE_STUDY_DOCUMENT.replace("    1, 0\n    0, 1\n", "    1, 1\n    1, 1\n");
    let model = write_model(dir.path(), "singular.model", &text);
    assert_eq!(ddyn(&["analyze", &model]).status.code(), Some(2));
}

#[test]
fn singular_pose_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_model(dir.path(), "leg.model", CASE_STUDY_DOCUMENT);
    let o = ddyn(&["analyze", &model, "--pose", "0, 0, 0, 0.5, 0", "--metrics", "git"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(ddyn(&["wedge", "--mu", "abc", "--alpha-deg", "45"]).status.code(), Some(2));
    assert_eq!(ddyn(&["wedge", "--mu", "-1", "--alpha-deg", "45"]).status.code(), Some(2));
}
