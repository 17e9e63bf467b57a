use std::path::Path;
use std::process::{Command, Output};

fn stochlag(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochlag"))
        .args(args)
        .current_dir(cwd)
        .env_remove("STOCHLAG_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_system_exits_2_with_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochlag(&["simulate", "--system", "unknown"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in ["harmonic", "pendulum", "duffing", "3dof", "wave", "beam"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unstable_wave_step_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochlag(&["simulate", "--system", "wave", "--dt", "0.01"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("stability"));
}

#[test]
fn missing_ensemble_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochlag(&["discover", "--ensemble", "missing.bin"], dir.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"system": "harmonic", "sede": 1}"#).unwrap();
    let o = stochlag(&["simulate", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = stochlag(&["simulate", "--system", "harmonic", "--param", "k"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = stochlag(&["simulate", "--system", "harmonic", "--param", "spring=3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_for_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["simulate", "discover", "bench"] {
        let o = stochlag(&[sub, "--help"], dir.path());
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("--out"));
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--system", "harmonic", "--seed", "7", "--n-real", "20", "--csv", "1"];
    let a = stochlag(&[&args[..], &["--out", "a"]].concat(), dir.path());
    let b = stochlag(&[&args[..], &["--out", "b"]].concat(), dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0));
    for f in ["harmonic_ensemble.bin", "harmonic_system.json", "harmonic_ensemble.csv"] {
        let x = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let y = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_stochlag"))
        .args(["simulate", "--system", "harmonic", "--n-real", "2", "--t-f", "0.1"])
        .current_dir(dir.path())
        .env("STOCHLAG_OUT", "from_env")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("from_env/harmonic_ensemble.bin").exists());
}

#[test]
fn discover_pendulum_from_saved_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let sim = stochlag(&["simulate", "--system", "pendulum", "--out", "o"], dir.path());
    assert_eq!(sim.status.code(), Some(0), "{}", stderr(&sim));
    let run = || stochlag(&["discover", "--ensemble", "o/pendulum_ensemble.bin", "--out", "o"], dir.path());
    let first = run();
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let lag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/pendulum_lagrangian.json")).unwrap()).unwrap();
    let terms = lag["lagrangian"]["terms"].as_array().unwrap();
    assert_eq!(terms.len(), 2);
    let cos = terms.iter().find(|t| t[1]["func"] == "cos").expect("cosine term retained");
    let coef = cos[0].as_f64().unwrap();
    assert!((coef - 9.81).abs() / 9.81 < 0.01, "{coef}");
    for f in ["diffusion.json", "eom.json", "hamiltonian.json", "models.txt"] {
        assert!(dir.path().join(format!("o/pendulum_{f}")).exists());
    }
    let before = std::fs::read(dir.path().join("o/pendulum_models.txt")).unwrap();
    let second = run();
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(before, std::fs::read(dir.path().join("o/pendulum_models.txt")).unwrap());
}

#[test]
fn bench_subset_writes_reports_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochlag(
        &["bench", "--only", "harmonic,duffing", "--prediction-n-real", "20", "--out", "b"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# seed 2024 (default)"), "{text}");
    let b = dir.path().join("b");
    assert!(b.join("harmonic_report.json").exists());
    assert!(b.join("duffing_report.json").exists());
    assert!(!b.join("pendulum_report.json").exists());
    let summary = std::fs::read_to_string(b.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.starts_with("system,"));
}

#[test]
fn bench_rejects_unknown_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = stochlag(&["bench", "--only", "harmonic,nope"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_reports_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    // `k` is unknown to the pendulum but valid for the harmonic oscillator.
    let o = stochlag(
        &["bench", "--only", "harmonic,pendulum", "--param", "k=1000", "--prediction-n-real", "10", "--out", "b"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let summary = std::fs::read_to_string(dir.path().join("b/summary.csv")).unwrap();
    assert!(summary.contains("harmonic,\""));
    assert!(summary.lines().any(|l| l.starts_with("pendulum,") && l.contains("error")));
}
