use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use sgkit::io::{load_nfg, save_json, write_features_csv, GameDocument, GraphDoc};
use sgkit::presets::chinatown_data;
use sgkit::schedule::{Schedule, ScheduleFormGame};
use sgkit::{BimatrixGame, NodeId, TargetSpec};

fn sgkit(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgkit")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\nstderr: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
}

fn value_of(path: &Path) -> f64 {
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v["value"].as_f64().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn sfg_document(targets: Vec<TargetSpec>, schedules: Vec<Vec<Vec<u32>>>, general_sum: bool) -> GameDocument {
    let schedules = schedules
        .into_iter()
        .map(|list| {
            list.into_iter()
                .map(|t| Schedule {
                    targets: t.into_iter().map(NodeId).collect::<BTreeSet<_>>(),
                    movement_steps: 2,
                    movement_cost: 0.0,
                })
                .collect()
        })
        .collect();
    GameDocument {
        title: None,
        general_sum,
        graph: None,
        config: None,
        protocol: None,
        homes: None,
        sfg: Some(ScheduleFormGame::from_schedules(targets, schedules).unwrap()),
        matrices: None,
    }
}

#[test]
fn nash_lp_solves_a_matrix_game() {
    let dir = TempDir::new().unwrap();
    let g = BimatrixGame::zero_sum_from_rows(&[vec![3.0, -1.0], vec![-2.0, 1.0]]).unwrap();
    save_json(&dir.path().join("g.json"), &GameDocument::from_matrix(&g, Some("2x2".into()))).unwrap();
    ok(&sgkit(&["solve", "g.json", "--solver", "nash_lp", "--out", "r.json"], dir.path()));
    assert!((value_of(&dir.path().join("r.json")) - 1.0 / 7.0).abs() <= 1e-9);

    let out = sgkit(&["solve", "g.json", "--solver", "nash_lp", "--format", "csv"], dir.path());
    ok(&out);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("player,index,probability"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn sse_simple_on_singleton_schedules() {
    let dir = TempDir::new().unwrap();
    let targets = vec![
        TargetSpec::general(NodeId(0), -4.0, 0.0, 0.0, 4.0),
        TargetSpec::general(NodeId(1), -2.0, 0.0, 0.0, 2.0),
    ];
    let doc = sfg_document(targets, vec![vec![vec![0], vec![1]]], true);
    save_json(&dir.path().join("g.json"), &doc).unwrap();
    ok(&sgkit(&["solve", "g.json", "--solver", "sse_simple", "--out", "s.json"], dir.path()));
    ok(&sgkit(&["solve", "g.json", "--solver", "sse_general", "--out", "m.json"], dir.path()));
    assert!((value_of(&dir.path().join("s.json")) + 4.0 / 3.0).abs() <= 1e-9);
    assert!((value_of(&dir.path().join("m.json")) + 4.0 / 3.0).abs() <= 1e-9);
}

#[test]
fn double_oracle_sfg_matches_nash_lp() {
    let dir = TempDir::new().unwrap();
    // Peak payoff 1 keeps the normalised matrix in raw units.
    let targets = [1.0, 0.7, 0.45, 0.2].iter().enumerate().map(|(i, &v)| TargetSpec::zero_sum(NodeId(i as u32), v)).collect();
    let pairs = vec![vec![0, 1], vec![2, 3], vec![0, 2], vec![1], vec![3]];
    let doc = sfg_document(targets, vec![pairs.clone(), pairs], false);
    save_json(&dir.path().join("g.json"), &doc).unwrap();
    ok(&sgkit(&["solve", "g.json", "--solver", "do_sfg", "--out", "do.json"], dir.path()));
    ok(&sgkit(&["solve", "g.json", "--solver", "nash_lp", "--out", "lp.json"], dir.path()));
    let (d, l) = (value_of(&dir.path().join("do.json")), value_of(&dir.path().join("lp.json")));
    assert!((d - l).abs() <= 1e-7, "do_sfg {d} vs nash_lp {l}");
}

#[test]
fn solver_form_mismatch_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let g = BimatrixGame::from_rows(&[vec![1.0, 0.0]], &[vec![0.0, 1.0]]).unwrap();
    save_json(&dir.path().join("g.json"), &GameDocument::from_matrix(&g, None)).unwrap();
    for solver in ["sse_simple", "nash_lp", "do_sfg", "rm_plus"] {
        let out = sgkit(&["solve", "g.json", "--solver", solver], dir.path());
        assert_eq!(out.status.code(), Some(2), "{solver}");
    }
}

#[test]
fn preset_generation_is_deterministic() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "gen.json",
        r#"{"domain": "gsg", "tracks": {"synthetic": {}}, "params": {"preset": {"experiment": "sse_general"}}, "export_nfg": true}"#,
    );
    let first = sgkit(&["generate", "--config", "gen.json", "--out", "a.json"], dir.path());
    ok(&first);
    assert!(String::from_utf8_lossy(&first.stdout).starts_with("nodes 49 targets 10 "));
    ok(&sgkit(&["generate", "--config", "gen.json", "--out", "b.json"], dir.path()));
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(read("a.nfg"), read("b.nfg"));

    for name in ["s1.json", "s2.json"] {
        ok(&sgkit(&["--no-timing", "solve", "a.json", "--solver", "sse_general", "--out", name], dir.path()));
    }
    assert_eq!(read("s1.json"), read("s2.json"));

    write(dir.path(), "exp.json", r#"{"games": ["a.json"], "count": 2}"#);
    for out in ["e1", "e2"] {
        ok(&sgkit(&["--no-timing", "--seed", "7", "experiment", "sse_compare", "--config", "exp.json", "--out", out], dir.path()));
    }
    assert_eq!(read("e1/sse.csv"), read("e2/sse.csv"));
    assert_eq!(read("e1/sse_summary.json"), read("e2/sse_summary.json"));
}

#[test]
fn missing_weight_names_the_feature_type() {
    let dir = TempDir::new().unwrap();
    let (graph, mut features, blocks) = chinatown_data(12, 3).unwrap();
    features[4].kind = "unobtainium".into();
    save_json(&dir.path().join("streets.json"), &GraphDoc::from_graph(&graph, &[])).unwrap();
    save_json(&dir.path().join("blocks.json"), &blocks).unwrap();
    write_features_csv(&dir.path().join("features.csv"), &features).unwrap();
    write(
        dir.path(),
        "gen.json",
        r#"{"domain": "isg",
            "data": {"files": {"street_graph": "streets.json", "features": "features.csv", "blocks": "blocks.json"}},
            "params": {"preset": {"experiment": "sse_simple"}}}"#,
    );
    let out = sgkit(&["generate", "--config", "gen.json", "--out", "g.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unobtainium"));
    assert!(!dir.path().join("g.json").exists());
}

#[test]
fn bad_config_reports_the_field_path() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "gen.json", r#"{"domain": "gsg", "tracks": {"synthetic": {"seed": "x"}}, "params": {"preset": {"experiment": "sse_general"}}}"#);
    let out = sgkit(&["generate", "--config", "gen.json", "--out", "g.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gen.json"));
}

#[test]
fn export_nfg_round_trips() {
    let dir = TempDir::new().unwrap();
    let g = BimatrixGame::from_rows(&[vec![0.1, -2.5, 3.0], vec![1e-17, 4.0, -0.3]], &[vec![1.0, 2.0, 3.0], vec![-1.0, 0.0, 7.25]])
        .unwrap();
    save_json(&dir.path().join("g.json"), &GameDocument::from_matrix(&g, Some("roundtrip".into()))).unwrap();
    ok(&sgkit(&["export-nfg", "g.json", "--out", "g.nfg"], dir.path()));
    let (back, title) = load_nfg(&dir.path().join("g.nfg")).unwrap();
    assert_eq!(title, "roundtrip");
    assert_eq!((back.a, back.b), (g.a, g.b));
}

#[test]
fn random_lab_requires_a_seed() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "lab.json", r#"{"n": 6, "samples": 20, "kind": "uniform_bimatrix"}"#);
    let out = sgkit(&["experiment", "random_lab", "--config", "lab.json", "--out", "lab"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    ok(&sgkit(&["--seed", "3", "experiment", "random_lab", "--config", "lab.json", "--out", "lab"], dir.path()));
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("lab/random_lab_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["samples"].as_array().unwrap().len(), 20);
}

#[test]
fn sparsity_and_convergence_write_tables() {
    let dir = TempDir::new().unwrap();
    let g = BimatrixGame::zero_sum_from_rows(&[vec![3.0, -1.0, 0.5], vec![-2.0, 1.0, 0.0], vec![0.0, 0.2, -1.0]]).unwrap();
    save_json(&dir.path().join("g.json"), &GameDocument::from_matrix(&g, None)).unwrap();
    write(dir.path(), "sp.json", r#"{"games": ["g.json"]}"#);
    ok(&sgkit(&["experiment", "sparsity", "--config", "sp.json", "--out", "out"], dir.path()));
    let csv = fs::read_to_string(dir.path().join("out/sparsity.csv")).unwrap();
    assert!(csv.starts_with("instance,k,value,runtime_s,support,u_norm,u_norm_undefined,r_norm,k_norm"));
    let last_k_norm: f64 = csv.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert_eq!(last_k_norm, 1.0);

    write(dir.path(), "cv.json", r#"{"games": ["g.json"], "iterations": 200, "sample_interval": 50}"#);
    ok(&sgkit(&["experiment", "convergence", "--config", "cv.json", "--out", "out"], dir.path()));
    let csv = fs::read_to_string(dir.path().join("out/convergence.csv")).unwrap();
    let algorithms: BTreeSet<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(algorithms, BTreeSet::from(["do", "prm_plus", "rm", "rm_plus"]));
}
