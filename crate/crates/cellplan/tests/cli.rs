use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cellplan::bench::read_csv;
use cellplan::formats::weights_to_json;
use cellplan_core::gnn::{Arch, GnnWeights, Header};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cellplan"));
    c.env_remove("CELLPLAN_MODEL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn model(dir: &Path, arch: Arch) -> PathBuf {
    let w = GnnWeights::random(Header::standard(arch, 16), 11);
    write(dir, &format!("{}.json", arch.as_str()), &weights_to_json(&w))
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

const ROOM: &str = r#"{"dim":2,"bounds":[0,0,1,1],"obstacles":[{"polygon":[[0.4,0.4],[0.6,0.4],[0.6,0.6],[0.4,0.6]]}]}"#;

#[test]
fn same_cell_query_is_straight() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", ROOM);
    let o = run(&["plan", "--map", m.to_str().unwrap(), "--start", "0.05,0.05", "--goal", "0.08,0.09"]);
    let v = json(&o);
    assert!((v["cost"].as_f64().unwrap() - 0.05).abs() < 1e-12);
    assert_eq!(v["waypoints"].as_array().unwrap().len(), 2);
    assert!(v["time_ms"].as_f64().is_some());
}

#[test]
fn sealed_room_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let ring = r#"{"dim":2,"bounds":[0,0,1,1],"obstacles":[
        {"polygon":[[0.3,0.3],[0.7,0.3],[0.7,0.35],[0.3,0.35]]},
        {"polygon":[[0.3,0.65],[0.7,0.65],[0.7,0.7],[0.3,0.7]]},
        {"polygon":[[0.3,0.35],[0.35,0.35],[0.35,0.65],[0.3,0.65]]},
        {"polygon":[[0.65,0.35],[0.7,0.35],[0.7,0.65],[0.65,0.65]]}]}"#;
    let m = write(dir.path(), "m.json", ring);
    let o = run(&["plan", "--map", m.to_str().unwrap(), "--start", "0.5,0.5", "--goal", "0.1,0.1"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!o.stderr.is_empty());
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", ROOM);
    let ms = m.to_str().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"dim\":2");
    for args in [
        vec!["plan", "--map", bad.to_str().unwrap(), "--start", "0.1,0.1", "--goal", "0.9,0.9"],
        vec!["plan", "--map", ms, "--start", "0.5,0.5", "--goal", "0.9,0.9"],
        vec!["plan", "--map", ms, "--start", "0.1", "--goal", "0.9,0.9"],
        vec!["plan", "--map", ms],
        vec!["plan", "--map", "/nonexistent.json", "--start", "0.1,0.1", "--goal", "0.9,0.9"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(3), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let w3 = model(dir.path(), Arch::Gatv2_3d);
    let o = run(&["plan", "--map", ms, "--start", "0.1,0.1", "--goal", "0.9,0.9", "--model", w3.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("feature packing"));
}

fn beta_zero_matches_unguided(family: &str, arch: Arch) {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let o = run(&["gen-scenario", "--family", family, "--seed", "4", "--output", m.to_str().unwrap()]);
    assert!(o.status.success());
    let w = model(dir.path(), arch);
    let base = ["plan", "--map", m.to_str().unwrap(), "--omit-timing", "--emit-corridors"];
    let zero = bin().args(base).args(["--beta", "0"]).env("CELLPLAN_MODEL", &w).output().unwrap();
    let ung = bin().args(base).args(["--unguided"]).env("CELLPLAN_MODEL", &w).output().unwrap();
    assert!(zero.status.success() && ung.status.success());
    assert_eq!(zero.stdout, ung.stdout);
    let guided = bin().args(base).env("CELLPLAN_MODEL", &w).output().unwrap();
    assert!(guided.status.success());
}

#[test]
fn zero_beta_output_is_identical_2d() {
    beta_zero_matches_unguided("multi_room", Arch::Gcn2d);
}

#[test]
fn zero_beta_output_is_identical_3d() {
    beta_zero_matches_unguided("bn_maze3d", Arch::Gatv2_3d);
}

#[test]
fn generated_scenarios_plan() {
    let dir = tempfile::tempdir().unwrap();
    for family in ["forest", "labyrinth", "bottleneck2d", "bn_layers3d"] {
        let m = dir.path().join(format!("{family}.json"));
        assert!(run(&["gen-scenario", "--family", family, "--output", m.to_str().unwrap()]).status.success());
        let v = json(&run(&["plan", "--map", m.to_str().unwrap()]));
        assert!(v["cost"].as_f64().unwrap() > 0.0, "{family}");
        let trace = v["trace"].as_array().unwrap();
        assert!(trace.windows(2).all(|w| w[1]["cost"].as_f64() < w[0]["cost"].as_f64()));
    }
    let d = json(&run(&["gen-scenario", "--dynamic", "--steps", "4", "--seed", "2"]));
    assert_eq!(d["steps"].as_array().unwrap().len(), 4);
    assert!(d["query"]["start"].is_array());
    assert_eq!(run(&["gen-scenario", "--family", "nope"]).status.code(), Some(3));
}

#[test]
fn decompose_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", ROOM);
    let d = json(&run(&["decompose", "--map", m.to_str().unwrap()]));
    assert_eq!(d["cell_count"].as_u64().unwrap() as usize, d["cells"].as_array().unwrap().len());
    let w = model(dir.path(), Arch::Gcn2d);
    let q = ["--start", "0.1,0.1", "--goal", "0.9,0.9"];
    let e = json(&bin().args(["export-graph", "--map", m.to_str().unwrap()]).args(q).output().unwrap());
    assert!(e.get("scores").is_none());
    let n = e["portals"].as_array().unwrap().len();
    assert_eq!(e["edge_index"][0].as_array().unwrap().len(), 2 * n);
    let e = json(
        &bin()
            .args(["export-graph", "--map", m.to_str().unwrap(), "--model", w.to_str().unwrap()])
            .args(q)
            .output()
            .unwrap(),
    );
    let s = e["scores"].as_array().unwrap();
    assert_eq!(s.len(), n);
    assert!(s.iter().all(|x| (0.0..=1.0).contains(&x.as_f64().unwrap())));
}

#[test]
fn benchmark_writes_round_trippable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.json", r#"{"scenarios":[]}"#);
    let o = run(&["benchmark", "--scenarios", empty.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());

    write(dir.path(), "room.json", ROOM);
    let list = write(
        dir.path(),
        "list.json",
        r#"{"scenarios":[{"family":"forest","obstacles":10},{"map":"room.json","start":[0.1,0.1],"goal":[0.9,0.9]}]}"#,
    );
    let w = model(dir.path(), Arch::Gcn2d);
    let csv_path = dir.path().join("out.csv");
    let o = bin()
        .args(["benchmark", "--scenarios", list.to_str().unwrap(), "--runs", "3", "--seed-base", "5"])
        .args(["--output", csv_path.to_str().unwrap(), "--workers", "2"])
        .env("CELLPLAN_MODEL", &w)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("median time-to-first"));
    let text = std::fs::read(&csv_path).unwrap();
    let recs = read_csv(text.as_slice()).unwrap();
    assert_eq!(recs.len(), (3 + 1) * 2);
    assert!(recs.iter().all(|r| r.success && r.violations == 0));
    assert_eq!(recs.iter().filter(|r| r.config == "guided").count(), 4);
    let mut again = Vec::new();
    cellplan::bench::write_csv(&mut again, &recs).unwrap();
    assert_eq!(again, text);
}

#[test]
fn execute_cbf_keeps_clearance() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", ROOM);
    let v = json(&run(&[
        "execute-cbf", "--map", m.to_str().unwrap(), "--start", "0.1,0.5", "--goal", "0.9,0.5", "--radius", "0.01",
    ]));
    assert!(v["min_h"].as_f64().unwrap() >= -1e-9);
    assert!(v["steps"].as_array().unwrap().iter().all(|s| s["active"].as_u64().unwrap() <= 4));
}
