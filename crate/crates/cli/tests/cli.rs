use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annloewner"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn kernel_checks_and_csv() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "k.json", r#"{"r": 0.2, "grid": {"moduli": 4, "angles": 8}}"#);
    let o = run(dir.path(), &["kernel", "--config", "k.json", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = read_json(&dir.path().join("out/kernel.json"));
    assert_eq!(report["passed"], true);
    assert!(report["free_term_error"].as_f64().unwrap() < 1e-9);
    assert!(report["reconstruction_max_error"].as_f64().unwrap() < 1e-8);
    let csv = std::fs::read_to_string(dir.path().join("out/kernel.csv")).unwrap();
    assert!(csv.starts_with("re_z,im_z,re_k,im_k\n"));
    assert_eq!(csv.lines().count(), 33);
}

#[test]
fn kernel_at_zero_radius_is_the_schwarz_kernel() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "k.json", r#"{"r": 0.0, "points": [[0.5, 0.0]]}"#);
    let o = run(dir.path(), &["kernel", "--config", "k.json", "--out", "."]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("kernel.csv")).unwrap();
    let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((row[2] - 3.0).abs() < 1e-14 && row[3].abs() < 1e-14);
    assert!(read_json(&dir.path().join("kernel.json"))["reconstruction_max_error"].is_null());
}

#[test]
fn evolve_scaling_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "e.json",
        r#"{"driving": "scaling", "s": 0.0, "t": 1.0, "points": [[0.5, 0.1], [0.1, -0.2]]}"#,
    );
    let o = run(dir.path(), &["evolve", "--config", "e.json", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0));
    let report = read_json(&dir.path().join("out/evolve.json"));
    // r(1)/r(0) = e^{−π} for the harmonic decay preset
    let factor = (-std::f64::consts::PI).exp();
    for p in report.as_array().unwrap() {
        assert_eq!(p["status"]["status"], "completed");
        for k in 0..2 {
            let want = p["z"][k].as_f64().unwrap() * factor;
            assert!((p["end"][k].as_f64().unwrap() - want).abs() < 1e-10);
        }
    }
    let traj = std::fs::read_to_string(dir.path().join("out/trajectory_001.csv")).unwrap();
    assert!(traj.starts_with("t,re_w,im_w,rho,r_of_t\n"));
}

#[test]
fn evolve_rejects_points_outside_the_annulus() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "e.json", r#"{"driving": "scaling", "s": 0.0, "t": 1.0, "points": [[1.5, 0.0]]}"#);
    assert_eq!(run(dir.path(), &["evolve", "--config", "e.json"]).status.code(), Some(1));
}

#[test]
fn classify_presets() {
    let dir = TempDir::new().unwrap();
    for (preset, want) in [("rotation", "II"), ("scaling", "III"), ("degenerate_exp", "II")] {
        write(dir.path(), "c.json", &format!(r#"{{"driving": "{preset}"}}"#));
        let o = run(dir.path(), &["classify", "--config", "c.json", "--out", "out"]);
        assert_eq!(o.status.code(), Some(0), "{preset}");
        assert!(stdout(&o).starts_with(&format!("type {want} ")), "{}", stdout(&o));
        let report = read_json(&dir.path().join("out/classify.json"));
        assert_eq!(report["report"]["declared_type"], want);
        assert_eq!(report["report"]["consistent"], true);
    }
}

#[test]
fn classify_accepts_inline_driving_data() {
    let dir = TempDir::new().unwrap();
    let inline = r#"{
        "driving": {
            "system": {"kind": "harmonic_decay", "omega0": 1.0, "lambda": 1.0},
            "C": 0.25,
            "measures": [{"t": 0.0, "mu1": {"uniform": 1.0}, "mu2": {}}]
        }
    }"#;
    write(dir.path(), "c.json", inline);
    let o = run(dir.path(), &["classify", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("type III "));
}

#[test]
fn validate_rejects_nonintegrable_mixed_preset() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "v.json", r#"{"driving": "mixed_invalid"}"#);
    let o = run(dir.path(), &["validate", "--config", "v.json", "--out", "."]);
    assert_eq!(o.status.code(), Some(2));
    let report = read_json(&dir.path().join("validate.json"));
    assert_eq!(report["passed"], false);
    write(dir.path(), "v.json", r#"{"driving": "mixed_radial"}"#);
    assert_eq!(run(dir.path(), &["validate", "--config", "v.json"]).status.code(), Some(0));
}

#[test]
fn chain_suite_on_rotation() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "ch.json",
        r#"{"driving": "rotation", "horizon": 2.0, "samples": 10,
            "pde": {"s": 0.8, "z": [0.3, 0.4], "steps": [1e-2, 1e-3, 1e-4], "min_order": 1.8}}"#,
    );
    let o = run(dir.path(), &["chain", "--config", "ch.json", "--out", "out", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let report = read_json(&dir.path().join("out/chain.json"));
    assert_eq!(report["passed"], true);
    assert_eq!(report["seed"], 3);
    assert!(report["pde"]["order"].as_f64().unwrap() >= 1.8);
    assert_eq!(report["range"]["declared_type"], "II");
    assert!(dir.path().join("out/chain_image.csv").exists());
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "ch.json", r#"{"driving": "atomic", "horizon": 1.0, "samples": 5}"#);
    for out in ["a", "b"] {
        let o = run(dir.path(), &["chain", "--config", "ch.json", "--out", out]);
        assert_eq!(o.status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a/chain.json")).unwrap();
    let b = std::fs::read(dir.path().join("b/chain.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.json", r#"{"driving": "split", "extra": true}"#);
    assert_eq!(run(dir.path(), &["classify", "--config", "bad.json"]).status.code(), Some(1));
    write(dir.path(), "bad.json", r#"{"driving": "no_such_preset"}"#);
    assert_eq!(run(dir.path(), &["classify", "--config", "bad.json"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["classify"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["classify", "--config", "missing.json"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["nonsense"]).status.code(), Some(1));
    write(dir.path(), "k.json", r#"{"r": 0.2}"#);
    assert_eq!(run(dir.path(), &["kernel", "--config", "k.json", "--tol", "-1"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn thread_cap_must_be_positive() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "k.json", r#"{"r": 0.3, "grid": {"moduli": 2, "angles": 4}}"#);
    let run_with = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_annloewner"))
            .current_dir(dir.path())
            .env("ANNLOEWNER_THREADS", threads)
            .args(["kernel", "--config", "k.json"])
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run_with("0"), Some(1));
    assert_eq!(run_with("2"), Some(0));
}

#[test]
fn selftest_passes_and_prints_table() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["selftest", "--out", "out"]);
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 11);
    let results = read_json(&dir.path().join("out/selftest.json"));
    assert_eq!(results.as_array().unwrap().len(), 11);
}
