use std::path::Path;
use std::process::{Command, Output};

fn grng(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grng"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gen_build_search_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&grng(d, &["gen", "--dataset", "uniform:1000:2", "--seed", "3", "--out", "data.fvecs"]));
    let out = ok(&grng(d, &[
        "build", "--dataset", "data.fvecs", "--layers", "2", "--oracle", "--out", "h.json",
        "--stats-json", "build.json", "--stats-csv", "build.csv",
    ]));
    assert!(out.contains("oracle: exact"), "{out}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("build.json")).unwrap()).unwrap();
    assert_eq!(report["oracle"]["extra"], 0);
    assert_eq!(report["oracle"]["missing"], 0);
    assert_eq!(report["counted"], report["evaluations"]);
    assert!(std::fs::read_to_string(d.join("build.csv")).unwrap().starts_with("phase,layer,stage,count\n"));

    let out = ok(&grng(d, &["search", "--snapshot", "h.json", "--count", "100", "--oracle", "--out", "nbrs.json"]));
    assert!(out.contains("oracle: exact"), "{out}");
    let nbrs: Vec<Vec<u32>> = serde_json::from_str(&std::fs::read_to_string(d.join("nbrs.json")).unwrap()).unwrap();
    assert_eq!(nbrs.len(), 100);

    ok(&grng(d, &["verify", "--snapshot", "h.json"]));
}

#[test]
fn single_point_build_is_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("one.csv"), "0.5,0.5\n").unwrap();
    ok(&grng(dir.path(), &["build", "--dataset", "one.csv", "--oracle", "--stats-json", "r.json"]));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(report["edges"], 0);
}

#[test]
fn graphs_export_and_cap() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("line.csv"), "x\n0\n1\n2\n").unwrap();
    ok(&grng(d, &["graphs", "--dataset", "line.csv", "--out", "g"]));
    assert_eq!(std::fs::read_to_string(d.join("g/rng.txt")).unwrap(), "0 1\n1 2\n");
    assert_eq!(std::fs::read_to_string(d.join("g/mst.txt")).unwrap(), "0 1\n1 2\n");

    let out = grng(d, &["graphs", "--dataset", "uniform:100:2", "--oracle-cap", "50"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_one_row_per_config() {
    let dir = tempfile::tempdir().unwrap();
    ok(&grng(dir.path(), &[
        "sweep", "--dataset", "uniform:500:2", "--layers", "2,3", "--radii", "0.3,0.05,0",
        "--repeats", "2", "--out", "sweep.csv",
    ]));
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 2);
}

#[test]
fn tampered_snapshot_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&grng(d, &["build", "--dataset", "uniform:300:2", "--out", "h.json"]));
    let text = std::fs::read_to_string(d.join("h.json")).unwrap();
    let mut snap: serde_json::Value = serde_json::from_str(&text).unwrap();
    // drop one bottom-layer link from a single endpoint
    let bottom = snap["layers"].as_array_mut().unwrap().last_mut().unwrap();
    let entry = bottom.as_array_mut().unwrap().iter_mut()
        .find(|e| !e["neighbors"].as_array().unwrap().is_empty())
        .unwrap();
    entry["neighbors"].as_array_mut().unwrap().pop();
    std::fs::write(d.join("bad.json"), serde_json::to_string(&snap).unwrap()).unwrap();
    let out = grng(d, &["verify", "--snapshot", "bad.json"]);
    assert!(!out.status.success());
}

#[test]
fn bad_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!grng(dir.path(), &["build", "--dataset", "nope.csv"]).status.success());
    assert!(!grng(dir.path(), &["build", "--dataset", "uniform:10:2", "--metric", "cosine"]).status.success());
    assert!(!grng(dir.path(), &["build", "--dataset", "uniform:10:2", "--radii", "0.1,0.2,0"]).status.success());
}
