use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoslip"))
        .args(args)
        .current_dir(dir)
        .env("THERMOSLIP_THREADS", "1")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn weakly_coupled_suite_checks_nested_contraction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "weak.ini",
        "[domain]\ndim = 2\nresolution = 10, 5\n\n[rheology]\nkind = carreau\nbeta = 0.01\n\n[source]\nkind = zero\n",
    );
    let out = run(&["invariants", "--config", &cfg, "--json", "report.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let nested = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "nested_contraction")
        .unwrap();
    assert_eq!(nested["status"], "pass");
    let inner = nested["metrics"]["max_inner_ratio"].as_f64().unwrap();
    let l_hat = nested["metrics"]["max_l_hat"].as_f64().unwrap();
    assert!(l_hat < 1.0 && inner <= l_hat + 0.05);
}

#[test]
fn config_errors_exit_five() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(dir.path(), "missing.ini", "[domain]\ndim = 2\n");
    let unknown = write(dir.path(), "unknown.ini", "[domain]\ndim = 2\nbogus = 1\n\n[rheology]\nkind = carreau\n");
    let range = write(dir.path(), "range.ini", "[domain]\ndim = 2\n\n[rheology]\nkind = carreau\nmu0 = -1\n");
    for cfg in [missing, unknown, range] {
        let out = run(&["info", "--config", &cfg], dir.path());
        assert_eq!(out.status.code(), Some(5), "{cfg}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn shear_softening_declaration_is_expected_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "xf.ini",
        "[domain]\ndim = 2\nresolution = 10, 5\n\n[rheology]\nkind = carreau\nmonotone_in_s = nonincreasing\n",
    );
    let out = run(&["solve", "--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_writes_requested_outputs_and_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.ini",
        "[domain]\ndim = 2\nresolution = 10, 5\n\n[rheology]\nkind = carreau\n\n[output]\nvtk = false\n",
    );
    let out = run(&["solve", "--config", &cfg, "--out", "out"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let o = dir.path().join("out");
    assert!(o.join("history.csv").exists() && o.join("report.json").exists());
    assert!(!o.join("velocity.vtk").exists());
    let echo = std::fs::read_to_string(o.join("effective.ini")).unwrap();
    assert!(echo.contains("kind=carreau") && echo.contains("tol_outer="));
}

#[test]
fn heat_mms_table_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["mms", "--case", "heat", "--levels", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(": ok")).count(), 2);
}
