use std::process::Command;

fn dlnfem() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dlnfem"));
    c.env_remove("RUST_LOG");
    for (k, _) in std::env::vars() {
        if k.starts_with("DLNFEM_") {
            c.env_remove(k);
        }
    }
    c
}

#[test]
fn print_config_shows_resolved_values() {
    let out = dlnfem()
        .args(["--experiment", "time-convergence", "--dt-list", "1/4,1/8", "--print-config"])
        .env("DLNFEM_THETA", "0.7")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("experiment = time-convergence"));
    assert!(text.contains("dt = 0.25,0.125"));
    assert!(text.contains("theta = 0.7"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, "experiment = space-convergence\ntheta = 0.2\nnx = 4,8\n").unwrap();
    let out = dlnfem()
        .args(["--config", file.to_str().unwrap(), "--theta", "0.9", "--print-config"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("theta = 0.9"));
    assert!(text.contains("nx = 4,8"));
}

#[test]
fn bad_configuration_exits_with_code_2() {
    for args in [
        vec!["--experiment", "time-convergence", "--theta", "1.5"],
        vec!["--experiment", "no-such-experiment"],
        vec!["--theta", "0.5"],
    ] {
        let out = dlnfem().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn small_run_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dlnfem()
        .args(["--experiment", "project-convergence", "--nx-list", "2,4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("errors.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}
