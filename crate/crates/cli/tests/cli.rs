use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn svmflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svmflow")).args(args).output().expect("binary runs")
}

fn csv_without_wall_time(dir: &Path) -> Vec<String> {
    fs::read_to_string(dir.join("run.csv"))
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

#[test]
fn single_step_run_writes_initial_and_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = svmflow(&["run", "--n", "16", "--tau", "0.01", "--t-end", "0.01", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("run.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "step,t,energy,energy_target,mass,alpha,beta,solver_iters,dissipation,wall_ns");
    assert!(lines[2].starts_with("1,"));
    assert!(out.join("config.txt").exists());
}

#[test]
fn identical_configs_give_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = svmflow(&[
            "run",
            "--scheme",
            "svm1",
            "--init",
            "coarsening",
            "--n",
            "32",
            "--tau",
            "1e-4",
            "--t-end",
            "2e-3",
            "--lambda",
            "1",
            "--snapshot-at",
            "1e-3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(csv_without_wall_time(&a), csv_without_wall_time(&b));
    let snap = "phi_00000010.bin";
    assert_eq!(fs::read(a.join(snap)).unwrap(), fs::read(b.join(snap)).unwrap());
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = svmflow(&[
        "run",
        "--scheme",
        "savcn",
        "--n",
        "16",
        "--tau",
        "3e-3",
        "--t-end",
        "3e-2",
        "--c0",
        "0.5",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let second = dir.path().join("second");
    let o =
        svmflow(&["run", "--config", first.join("config.txt").to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_without_wall_time(&first), csv_without_wall_time(&second));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("base.cfg");
    fs::write(&cfg, "scheme = ficn\nn = 16\ntau = 0.01\nt_end = 0.05\n").unwrap();
    let out = dir.path().join("out");
    let o = svmflow(&["run", "--config", cfg.to_str().unwrap(), "--t-end", "0.02", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let echo = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echo.contains("scheme = ficn") && echo.contains("t_end = 0.02"));
    assert_eq!(fs::read_to_string(out.join("run.csv")).unwrap().lines().count(), 4);
}

#[test]
fn step_failure_exits_with_two_and_keeps_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fail");
    let o = svmflow(&[
        "run",
        "--scheme",
        "ficn",
        "--n",
        "32",
        "--epsilon",
        "0.1",
        "--lambda",
        "1",
        "--tau",
        "1",
        "--t-end",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let log = String::from_utf8_lossy(&o.stderr);
    assert!(log.contains("step 1"), "{log}");
    assert_eq!(fs::read_to_string(out.join("run.csv")).unwrap().lines().count(), 2);
}

#[test]
fn io_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = svmflow(&["run", "--n", "16", "--tau", "0.1", "--t-end", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_configuration_exits_with_one() {
    assert_eq!(svmflow(&["run", "--n", "100"]).status.code(), Some(1));
    assert_eq!(svmflow(&["run", "--init", "sphere"]).status.code(), Some(1));
    assert_eq!(svmflow(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(svmflow(&["experiment", "fig9"]).status.code(), Some(1));
    assert_eq!(svmflow(&["experiment", "cpu", "--profile", "laptop"]).status.code(), Some(1));
    assert!(svmflow(&["--help"]).status.success());
}
