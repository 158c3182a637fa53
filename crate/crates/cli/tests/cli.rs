use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn steklov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_steklov")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn cn_prints_closed_forms() {
    for (n, want) in [("1", 2.0 / PI), ("2", 1.0), ("3", 4.0 / PI)] {
        let out = steklov(&["hyperbolic", "cn", n]);
        assert_eq!(code(&out), 0);
        let got: f64 = stdout(&out).trim().parse().unwrap();
        assert!((got - want).abs() < 1e-10, "c_{n} = {got}");
    }
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    assert_eq!(code(&steklov(&["verify", "missing.toml"])), 2);
    assert_eq!(code(&steklov(&["frobnicate"])), 2);
    assert_eq!(code(&steklov(&["gamma", "x.json", "--stride", "3"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    std::fs::write(&cfg, "name = \"e\"\nchecks = []\n").unwrap();
    assert_eq!(code(&steklov(&["verify", cfg.to_str().unwrap()])), 2);
}

#[test]
fn bundled_scenarios_pass_and_the_fault_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut golden: Vec<PathBuf> = std::fs::read_dir(scenarios())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    golden.sort();
    assert!(golden.len() >= 7);
    for cfg in &golden {
        let report = dir.path().join(format!("{}.json", cfg.file_stem().unwrap().to_str().unwrap()));
        let out = steklov(&["verify", cfg.to_str().unwrap(), "-o", report.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}: {}", cfg.display(), stdout(&out));
        assert!(report.is_file());
    }
    let fault = scenarios().join("faults/disk_gamma_x10.toml");
    let report = dir.path().join("fault.json");
    let out = steklov(&["verify", fault.to_str().unwrap(), "-o", report.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn mesh_then_gamma_and_steklov() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("disk.json");
    let mesh = mesh.to_str().unwrap();
    assert_eq!(code(&steklov(&["mesh", "disk:n_radial=6,n_angular=6", "-o", mesh])), 0);

    let out = steklov(&["gamma", mesh, "--step", "4"]);
    assert_eq!(code(&out), 0);
    let est: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(est["value"].as_f64().unwrap() > 0.0);
    assert!(est["witness_A"].is_array() && est["witness_B"].is_array());

    let out = steklov(&["steklov", mesh, "-k", "3"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 5);
    let sigma1: f64 = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((sigma1 - 1.0).abs() < 0.02);

    let out = steklov(&["capacity", mesh, "--a", "0:0:6", "--b", "0:18:24"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("capacity = "));
    assert_eq!(code(&steklov(&["capacity", mesh, "--a", "0:0:6", "--b", "0:3:9"])), 2);
}

#[test]
fn thread_cap_does_not_change_the_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("square.toml");
    let run = |threads: &str, name: &str| {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_steklov"))
            .env("STEKLOV_THREADS", threads)
            .args(["verify", cfg.to_str().unwrap(), "-o", path.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        for r in v["records"].as_array_mut().unwrap() {
            r["wall_time_s"] = serde_json::Value::Null;
        }
        (v["records"].clone(), v["environment"]["threads"].clone())
    };
    let (one, t1) = run("1", "one.json");
    let (two, t2) = run("2", "two.json");
    assert_eq!(one, two);
    if cfg!(feature = "parallel") {
        assert_eq!((t1.as_u64(), t2.as_u64()), (Some(1), Some(2)));
    }
    let bad = Command::new(env!("CARGO_BIN_EXE_steklov"))
        .env("STEKLOV_THREADS", "zero")
        .args(["hyperbolic", "cn", "1"])
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}
