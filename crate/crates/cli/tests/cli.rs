use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn polyriesz(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyriesz"))
        .args(args)
        .env("POLYRIESZ_OUT", out)
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
fn graham_experiment_passes_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyriesz(&["experiment", "graham", "--format", "csv", "--deterministic"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("1.039201"));
    let summary = fs::read_to_string(dir.path().join("graham/summary.csv")).unwrap();
    assert!(summary.contains("area_ratio"));
    assert!(dir.path().join("graham/run.json").exists());
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = polyriesz(&["experiment", "graham", "--deterministic"], d.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("graham/run.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn unit_square_energy() {
    let dir = tempfile::tempdir().unwrap();
    let sq = dir.path().join("square.json");
    fs::write(&sq, r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
    let o = polyriesz(&["energy", "--polygon", sq.to_str().unwrap(), "--kernel", "power:k=2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-14);
}

#[test]
fn self_intersecting_polygon_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"vertices\": [\n    [0, 0],\n    [3, 0],\n    [3, 2],\n    [1, -1]\n  ]\n}\n").unwrap();
    let o = polyriesz(&["emit-svg", "--polygon", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("edges 0 and 2"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
}

#[test]
fn missing_file_and_bad_kernel_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyriesz(&["energy", "--polygon", "/nonexistent/p.json", "--kernel", "power:k=2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let sq = dir.path().join("square.json");
    fs::write(&sq, r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
    let o = polyriesz(&["energy", "--polygon", sq.to_str().unwrap(), "--kernel", "power:q=2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("power:q=2"));
    let o = polyriesz(&["energy", "--polygon", sq.to_str().unwrap(), "--kernel", "power:k=2", "--bogus"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = polyriesz(&["energy", "--polygon", sq.to_str().unwrap(), "--kernel", "power:k=2", "--degree", "31"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn svg_with_disc() {
    let dir = tempfile::tempdir().unwrap();
    let sq = dir.path().join("square.json");
    fs::write(&sq, r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
    let svg = dir.path().join("sq.svg");
    let o = polyriesz(&["emit-svg", "--polygon", sq.to_str().unwrap(), "--disc", "0.5,0.5,0.5", "--output", svg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = fs::read_to_string(svg).unwrap();
    assert!(s.contains("<circle") && s.contains("<polygon"));
}

#[test]
fn spectrum_and_grad_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyriesz(&["spectrum", "--ngon", "6", "--kernel", "power:k=6"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["zero_count"], 4);
    assert_eq!(v["positive_count"], 8);
    let o = polyriesz(&["spectrum", "--ngon", "6", "--kernel", "power:k=6", "--lagrangian"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let p = dir.path().join("p.json");
    fs::write(&p, r#"{"vertices": [[0,0],[2,0],[2.5,1],[1,2],[-0.5,1]]}"#).unwrap();
    let o = polyriesz(&["grad-check", "--polygon", p.to_str().unwrap(), "--kernel", "heat:Q=12,t=1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn optimize_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let o = polyriesz(&["optimize", "--n", "5", "--kernel", "power:k=6", "--restarts", "2", "--deterministic", "--format", "csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
    let trace = fs::read_to_string(dir.path().join("optimize/run/trace_0.csv")).unwrap();
    assert!(trace.starts_with("iteration,objective,violation,gradient_norm,remesh"));
    let poly = dir.path().join("optimize/run/polygon_1.json");
    let o = polyriesz(&["perimeter-r", "--polygon", poly.to_str().unwrap(), "--r", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}
