//! End-to-end runs of the `dpsolve` binary and the run-directory layout.

use std::path::{Path, PathBuf};
use std::process::Command;

use double_phase::config::ScenarioConfig;
use double_phase::runner::{execute, load_manifest, verify};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.cfg"))
}

fn dpsolve(args: &[&str]) -> (bool, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dpsolve")).args(args).output().expect("spawn dpsolve");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.success(), text)
}

fn only_run_dir(root: &Path) -> PathBuf {
    let dirs: Vec<PathBuf> = std::fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs.into_iter().next().unwrap()
}

#[test]
fn run_then_verify_convection() {
    let out = tempfile::tempdir().unwrap();
    let root = out.path().to_str().unwrap();
    let (ok, text) = dpsolve(&["run", scenario("t31").to_str().unwrap(), "--out", root]);
    assert!(ok, "{text}");
    assert!(text.contains("overall: PASS"));

    let dir = only_run_dir(out.path());
    assert!(!dir.to_string_lossy().ends_with(".partial"));
    for f in ["manifest.json", "config.txt", "fields/u_hat.vtk", "tables/picard_trace.csv"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let (ok, text) = dpsolve(&["verify", dir.to_str().unwrap()]);
    assert!(ok, "{text}");
}

#[test]
fn rejected_scenario_exits_nonzero_and_names_the_condition() {
    let out = tempfile::tempdir().unwrap();
    let (ok, text) = dpsolve(&["run", scenario("t31_rejected").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert!(!ok);
    assert!(text.contains("GATE FAILED") && text.contains("1 - b1 - b2/λR"), "{text}");
    let dir = only_run_dir(out.path());
    let (ok, _) = dpsolve(&["verify", dir.to_str().unwrap()]);
    assert!(!ok);
}

#[test]
fn bad_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "theorem = T41\nn = 8\np = 1.4\nq = 1.8\nwhat = 1\n").unwrap();
    let (ok, text) = dpsolve(&["run", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!ok);
    assert!(text.contains("what"), "{text}");
}

#[test]
fn runs_are_deterministic() {
    let config = ScenarioConfig::read(&scenario("t43")).unwrap();
    let (mut a, fa) = execute(&config).unwrap();
    let (mut b, fb) = execute(&config).unwrap();
    a.wall_time_s = 0.0;
    b.wall_time_s = 0.0;
    assert_eq!(a, b);
    assert_eq!(fa, fb);
}

#[test]
fn tampered_field_fails_verification() {
    let out = tempfile::tempdir().unwrap();
    let (ok, _) = dpsolve(&["run", scenario("eigen_only").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert!(ok);
    let dir = only_run_dir(out.path());
    assert!(verify(&dir).unwrap().passed);

    let vtk = dir.join("fields/robin_eigenfunction.vtk");
    let text = std::fs::read_to_string(&vtk).unwrap();
    let (head, values) = text.split_once("LOOKUP_TABLE default\n").unwrap();
    let mut lines: Vec<String> = values.lines().map(str::to_string).collect();
    lines[40] = "-5.0e-1".into();
    std::fs::write(&vtk, format!("{head}LOOKUP_TABLE default\n{}\n", lines.join("\n"))).unwrap();
    assert!(!verify(&dir).unwrap().passed);
}

#[test]
fn partial_runs_are_not_loaded() {
    let out = tempfile::tempdir().unwrap();
    let (ok, _) = dpsolve(&["run", scenario("space_checks").to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert!(ok);
    let dir = only_run_dir(out.path());
    assert!(load_manifest(&dir).is_ok());
    let partial = PathBuf::from(format!("{}.partial", dir.display()));
    std::fs::rename(&dir, &partial).unwrap();
    assert!(load_manifest(&partial).is_err());
    let (ok, _) = dpsolve(&["verify", partial.to_str().unwrap()]);
    assert!(!ok);
}
