use std::fs;
use std::process::Command;

fn delaylab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_delaylab"))
}

#[test]
fn list_names_every_experiment() {
    let out = delaylab().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["E1_parabolic", "E2_", "E3_", "E4_", "E5_", "E6_"] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
}

#[test]
fn passing_run_exits_zero_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e2.cfg");
    fs::write(&cfg, "# occupation run\nexperiment = E2\n").unwrap();
    let out = delaylab()
        .args(["run", "--seed", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("out/summary.txt")).unwrap();
    assert!(summary.contains("pass.c4_natural_measure_halves = true"));
    assert!(summary.contains("seed = 3"));
    assert!(dir.path().join("out/occupation.csv").exists());
}

#[test]
fn failing_flag_exits_one() {
    // far too short an orbit to reach 200 visits
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e1.cfg");
    fs::write(&cfg, "n_orbit = 5000\n").unwrap();
    let out = delaylab()
        .args(["run", "--experiment", "E1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [("unknown.cfg", "experiment = E1\nwobble = 3\n"), ("bad.cfg", "experiment = E1\nkappa = lots\n")] {
        let cfg = dir.path().join(name);
        fs::write(&cfg, text).unwrap();
        let out = delaylab().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"), "{name}");
    }
    let out = delaylab().args(["run", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
