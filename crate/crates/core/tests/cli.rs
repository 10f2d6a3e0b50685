use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn slaglab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_slaglab"));
    c.env_remove("SLAGLAB_CACHE");
    c
}

fn run(args: &[&str]) -> Output {
    slaglab().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Real basis `cos φ_k e_k + sin φ_k J e_k` in `(x, y)` coordinates.
fn phase_basis(phases: &[f64]) -> Vec<Vec<f64>> {
    let n = phases.len();
    (0..n)
        .map(|k| {
            let mut v = vec![0.0; 2 * n];
            v[k] = phases[k].cos();
            v[n + k] = phases[k].sin();
            v
        })
        .collect()
}

fn pair_json(p2: &[f64]) -> String {
    serde_json::json!({ "p1": phase_basis(&[0.0; 3]), "p2": phase_basis(p2) }).to_string()
}

fn geometry_only(dir: &Path) -> String {
    let p = dir.join("geo.json");
    std::fs::write(&p, r#"{"schema_version": 1, "geometry_only": true}"#).unwrap();
    p.display().to_string()
}

#[test]
fn angles_of_the_rotated_pair() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pair.json");
    std::fs::write(&input, pair_json(&[PI / 2.0; 3])).unwrap();
    let o = run(&["angles", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("= 1.500000000π"), "{text}");
    assert!(text.contains("not satisfied"));
    let o = run(&["angles", input.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["satisfies_criterion"], false);
    assert!((v["sum"].as_f64().unwrap() - 1.5 * PI).abs() < 1e-9);
}

#[test]
fn angles_from_stdin() {
    let mut child = slaglab()
        .args(["angles", "-", "--json"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(pair_json(&[2.0 * PI / 3.0, PI / 6.0, PI / 6.0]).as_bytes())
        .unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["satisfies_criterion"], true);
    assert_eq!(v["is_special"], true);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(
        run(&["angles", bad.to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["neck", "--mesh-level", "9"]).status.code(), Some(2));
    assert_eq!(
        run(&["neck", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn alpha_above_the_ceiling_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--alpha",
        "0.5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn single_point_verify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = geometry_only(dir.path());
    let mut tables = Vec::new();
    let mut csvs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = run(&[
            "verify",
            "--alpha",
            "0.1",
            "--config",
            &cfg,
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(matches!(o.status.code(), Some(0 | 1)), "{o:?}");
        let text = stdout(&o);
        assert!(text.contains("insufficient points"));
        assert!(text.contains("not evaluated"));
        tables.push(text);
        csvs.push([
            std::fs::read(out.join("verify_points.csv")).unwrap(),
            std::fs::read(out.join("verify_checks.csv")).unwrap(),
        ]);
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(tables[0], tables[1]);

    let saved = dir.path().join("run0").join("verify.json");
    let o = run(&["report", saved.to_str().unwrap()]);
    assert_eq!(stdout(&o), tables[0]);
    let o = run(&["report", saved.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = tables[0].lines().count() - 2;
    assert_eq!(v["checks"].as_array().unwrap().len(), rows);
}

#[test]
fn neck_tabulation_is_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    for _ in 0..2 {
        let o = slaglab()
            .args(["neck", "--json"])
            .env("SLAGLAB_CACHE", &cache)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!((v["angle_sum"].as_f64().unwrap() - PI).abs() < 1e-6);
    }
    assert_eq!(std::fs::read_dir(&cache).unwrap().count(), 1);
}
