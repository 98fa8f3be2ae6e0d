use std::process::Command;

fn revdiff() -> Command {
    Command::new(env!("CARGO_BIN_EXE_revdiff"))
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "samples = 0\n").unwrap();
    let out = revdiff().args(["sample", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn plot_of_missing_directory_fails() {
    let out = revdiff().args(["plot", "/nonexistent/out"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn show_config_round_trips() {
    let out = revdiff().arg("show-config").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("seed = 0"));
}
