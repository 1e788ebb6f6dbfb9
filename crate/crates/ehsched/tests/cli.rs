use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ehsched"))
}

fn scenario(name: &str) -> String {
    format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn run_online_tight_completes_at_two() {
    let out = bin()
        .args(["run-online", "--alg", "2", &scenario("tight.scn")])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("T_on2=2.000"), "stdout: {stdout}");
}

#[test]
fn solve_offline_tight() {
    let out = bin()
        .args(["solve-offline", &scenario("tight.scn"), "--grid", "800"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("T_off=1.000"), "stdout: {stdout}");
}

#[test]
fn compare_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "compare",
            &scenario("tight.scn"),
            "--grid",
            "600",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("ratio2=2.000"), "stdout: {stdout}");
    assert!(stdout.contains("ratio1=1.000"), "stdout: {stdout}");
    for name in ["offline.csv", "alg1.csv", "alg2.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("t,p,B_sent,E_used,phase\n"), "{name} malformed");
    }
}

#[test]
fn deterministic_output() {
    let run = || {
        bin()
            .args(["run-online", "--alg", "1", &scenario("fig1.scn")])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn unknown_subcommand_exits_2() {
    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_scenario_file_errors() {
    let out = bin().args(["solve-offline", "/nonexistent.scn"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
