use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rough-weights"))
}

#[test]
fn lattice_check_writes_a_passing_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lattice.csv");
    let status = bin().args(["lattice-check", "--depth", "3", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("scenario,quantity,depth,value,target,status,note"));
    assert!(!text.contains(",fail,"));
}

#[test]
fn reruns_agree_apart_from_timings() {
    // wall-clock rows are the only ones allowed to move
    let run = || {
        let out = bin().args(["verify", "comp-sparse", "--seed", "7"]).output().unwrap();
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        text.lines().filter(|l| !l.contains("runtime-seconds")).collect::<Vec<_>>().join("\n")
    };
    let (a, b) = (run(), run());
    assert!(a.lines().count() > 2);
    assert_eq!(a, b);
}

#[test]
fn unknown_config_key_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "scenario = identities\n[kernels]\nalphas = 0.5, 0.5\n").unwrap();
    let out = bin().args(["verify", "identities", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key"));
}

#[test]
fn unknown_scenario_is_rejected() {
    let out = bin().args(["verify", "nonsense"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn kernels_reports_stable_constants() {
    let out = bin().arg("kernels").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("kernels,")).count() >= 4);
    assert!(text.contains("stable"));
}
