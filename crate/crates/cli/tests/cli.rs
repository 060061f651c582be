use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ballistic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ballistic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) {
    let out = ballistic(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

fn docs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples")
}

#[test]
fn cluster_outputs_and_provenance() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("c");
    run_ok(&["simulate-cluster", "--n", "2000", "--seed", "3", "--out", out.to_str().unwrap()]);
    for f in ["config.json", "events.jsonl", "cluster.svg", "summary.json", "branches.csv", "branch_ccdf.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let cfg = json(&out.join("config.json"));
    assert_eq!(cfg["command"], "simulate-cluster");
    assert_eq!(cfg["args"]["seed"], 3);
    assert_eq!(cfg["args"]["n"], 2000);
    assert_eq!(read(&out.join("events.jsonl")).lines().count(), 2000);
    let summary = json(&out.join("summary.json"));
    assert!(summary["extremal_count"].as_u64().unwrap() >= 3);
    roxmltree::Document::parse(&read(&out.join("cluster.svg"))).unwrap();
}

#[test]
fn reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        run_ok(&["simulate-cluster", "--n", "3000", "--seed", "9", "--replicas", "3", "--out", o.to_str().unwrap()]);
    }
    for r in 0..3 {
        for f in ["events.jsonl", "cluster.svg", "summary.json", "branches.csv"] {
            let p = format!("replica_{r:04}/{f}");
            assert_eq!(read(&a.join(&p)), read(&b.join(&p)), "{p} differs");
        }
    }
    assert_eq!(read(&a.join("ensemble.json")), read(&b.join("ensemble.json")));

    let (a, b) = (dir.path().join("ea"), dir.path().join("eb"));
    for o in [&a, &b] {
        run_ok(&["escape-tail", "--theta", "0.4pi", "--replicas", "2e4", "--out", o.to_str().unwrap()]);
    }
    assert_eq!(read(&a.join("samples.csv")), read(&b.join("samples.csv")));
    assert_eq!(read(&a.join("fit.json")), read(&b.join("fit.json")));
}

#[test]
fn vertex_sweep() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v");
    run_ok(&[
        "simulate-vertex", "--theta", "0.35pi,0.45pi", "--replicas", "2000", "--cap", "1e4",
        "--out", out.to_str().unwrap(),
    ]);
    let lifetimes = read(&out.join("lifetimes.csv"));
    assert_eq!(lifetimes.lines().next(), Some("theta,a,T,cause"));
    assert_eq!(lifetimes.lines().count(), 4001);
    let fit = json(&out.join("fit.json"));
    assert_eq!(fit["fits"].as_array().unwrap().len(), 2);
    assert!(out.join("survival_0.csv").exists() && out.join("survival_1.csv").exists());
}

#[test]
fn escape_both_methods_reports_ks() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("e");
    run_ok(&[
        "escape-tail", "--theta", "0.4pi", "--method", "both", "--replicas", "2e4",
        "--out", out.to_str().unwrap(),
    ]);
    let fit = json(&out.join("fit.json"));
    let p = fit["ks_p"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    let samples = read(&out.join("samples.csv"));
    assert_eq!(samples.lines().next(), Some("mu,sigma,a,method,T,censored"));
    assert!(samples.contains(",euler,") && samples.contains(",exact_bridge,"));
}

#[test]
fn polygon_flow_logs_merges() {
    let dir = TempDir::new().unwrap();
    let verts = dir.path().join("p.txt");
    fs::write(&verts, "# pentagon\n0 0\n4 0\n5 2.5\n2 4.2\n-1 2\n").unwrap();
    let out = dir.path().join("f");
    run_ok(&[
        "polygon-flow", "--vertices-file", verts.to_str().unwrap(), "--steps", "20000",
        "--sample-every", "100", "--out", out.to_str().unwrap(),
    ]);
    let traj = read(&out.join("trajectory.csv"));
    assert_eq!(traj.lines().next(), Some("n,vertex_count,angles"));
    let merges = read(&out.join("merges.jsonl"));
    assert!(merges.lines().count() >= 1);
    for line in merges.lines() {
        let m: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(m["exterior_angle"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x");
    let o = out.to_str().unwrap();

    let r = ballistic(&["simulate-cluster", "--n", "0", "--out", o]);
    assert_eq!(r.status.code(), Some(2));
    let r = ballistic(&["simulate-cluster", "--n", "10", "--theta", "2.0", "--out", o]);
    assert_eq!(r.status.code(), Some(2));
    let r = ballistic(&["simulate-vertex", "--theta", "0.4pi", "--a", "100", "--out", o]);
    assert_eq!(r.status.code(), Some(2));
    let r = ballistic(&["escape-tail", "--theta", "0.4pi", "--h", "0.5", "--out", o]);
    assert_eq!(r.status.code(), Some(2));
    let r = ballistic(&["no-such-command"]);
    assert_eq!(r.status.code(), Some(2));

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "0 0\n1 one\n0 1\n").unwrap();
    let r = ballistic(&["polygon-flow", "--vertices-file", bad.to_str().unwrap(), "--out", o]);
    assert_eq!(r.status.code(), Some(1));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("bad.txt:2"), "stderr: {err}");

    let missing = dir.path().join("missing.txt");
    let r = ballistic(&["polygon-flow", "--vertices-file", missing.to_str().unwrap(), "--out", o]);
    assert_eq!(r.status.code(), Some(1));
}

/// The files under docs/examples were produced by the commands in docs/examples/README.md.
#[test]
fn golden_examples() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("cluster");
    run_ok(&["simulate-cluster", "--n", "20", "--seed", "1", "--out", out.to_str().unwrap()]);
    for f in ["events.jsonl", "cluster.svg", "summary.json", "branches.csv"] {
        assert_eq!(read(&out.join(f)), read(&docs().join("cluster").join(f)), "{f}");
    }

    let out = dir.path().join("flow");
    let verts = docs().join("pentagon.txt");
    run_ok(&[
        "polygon-flow", "--vertices-file", verts.to_str().unwrap(), "--steps", "2000",
        "--sample-every", "200", "--out", out.to_str().unwrap(),
    ]);
    for f in ["trajectory.csv", "merges.jsonl", "summary.json"] {
        assert_eq!(read(&out.join(f)), read(&docs().join("flow").join(f)), "{f}");
    }
}
