use std::path::Path;
use std::process::Command;

use hetnr::cli::{compare_to_oracle, load_dataset, RunConfig};
use hetnr::hin::io;
use hetnr::hop::{HopCandidate, SearchSpace};
use hetnr::model::Architecture;
use hetnr::search::OracleEntry;
use hetnr::Exec;

const SMALL: &str = r#"{
  "data": {"synthetic": {"nodes_per_type": {"A": 45, "P": 90, "C": 9},
                         "edges_per_relation": {"AP": 135, "CP": 90}}},
  "model": {"k": 2, "hidden": 8},
  "search": {"max_epochs": 4},
  "train": {"max_epochs": 4},
  "eval": {"num_folds": 2, "seeds": [0]}
}"#;

fn hetnr(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hetnr"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = hetnr(dir, args);
    assert!(
        out.status.success(),
        "hetnr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn workspace() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("run.json"), SMALL).unwrap();
    tmp
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_writes_loadable_dataset() {
    let tmp = workspace();
    let d = tmp.path();
    ok(d, &["generate", "-c", "run.json", "--seed", "1"]);
    ok(d, &["generate", "-c", "run.json", "--seed", "2", "--out", "other"]);
    let a = io::load_dir(&d.join("data")).unwrap();
    let b = io::load_dir(&d.join("other")).unwrap();
    assert_eq!(a.node_counts(), b.node_counts());
    assert_eq!(a.num_edges(), b.num_edges());
    let ea = std::fs::read(d.join("data/edges_AP.csv")).unwrap();
    let eb = std::fs::read(d.join("other/edges_AP.csv")).unwrap();
    assert_ne!(ea, eb);
    let gt = json(&d.join("data/ground_truth.json"));
    assert_eq!(gt["signal_type"], "C");
    assert_eq!(gt["signal_hop"], 2);
    assert_eq!(json(&d.join("data/manifest.json"))["config"]["data"]["synthetic"]["seed"], 1);
}

#[test]
fn missing_dataset_exits_2_and_names_path() {
    let tmp = workspace();
    let out = hetnr(tmp.path(), &["search", "-c", "run.json", "--data", "no_such_dir"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_dir"));
    let out = hetnr(tmp.path(), &["search", "-c", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_exits_1() {
    let tmp = workspace();
    std::fs::write(tmp.path().join("bad.json"), r#"{"model": {"kk": 1}}"#).unwrap();
    let out = hetnr(tmp.path(), &["search", "-c", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn multi_seed_search_and_strategies_share_schema() {
    let tmp = workspace();
    let d = tmp.path();
    ok(d, &["generate", "-c", "run.json"]);
    ok(d, &["search", "-c", "run.json", "--seeds", "0..2", "--out", "unrolled"]);
    for s in 0..3 {
        assert!(d.join(format!("unrolled/search/architecture_seed{s}.json")).exists());
    }
    let freq = json(&d.join("unrolled/search/frequency.json"));
    assert_eq!(freq["runs"], 3);
    for strategy in ["first-order", "sampled"] {
        ok(d, &["search", "-c", "run.json", "--seed", "0", "--strategy", strategy, "--out", strategy]);
        let keys = |p: &Path| {
            json(p)
                .as_object()
                .unwrap()
                .keys()
                .cloned()
                .collect::<Vec<_>>()
        };
        assert_eq!(
            keys(&d.join(format!("{strategy}/search/trace_seed0.json"))),
            keys(&d.join("unrolled/search/trace_seed0.json"))
        );
        assert_eq!(
            keys(&d.join(format!("{strategy}/search/architecture.json"))),
            keys(&d.join("unrolled/search/architecture.json"))
        );
    }
}

#[test]
fn pipeline_with_oracle_reports_regret() {
    let tmp = workspace();
    let d = tmp.path();
    for cmd in ["generate", "search", "retrain", "eval", "oracle", "report"] {
        ok(d, &[cmd, "-c", "run.json", "--no-timestamps"]);
    }
    for f in [
        "runs/retrain/results.json",
        "runs/retrain/seed0/manifest.json",
        "runs/eval/searched.json",
        "runs/eval/all_nodes.json",
        "runs/eval/report.md",
        "runs/oracle/ranking.json",
    ] {
        assert!(d.join(f).exists(), "{f} missing");
    }
    let md = std::fs::read_to_string(d.join("runs/report/report.md")).unwrap();
    assert!(md.contains("Regret"));
    let report = json(&d.join("runs/report/report.json"));
    assert!(report["oracle"]["regret_points"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["stages"].as_array().unwrap().len(), 4);
    let manifest = json(&d.join("runs/eval/manifest.json"));
    assert!(manifest["timestamp_unix"].is_null());
    assert!(manifest["inputs"]["labels.csv"].as_str().unwrap().len() == 64);
}

#[test]
fn report_without_eval_is_missing_file() {
    let tmp = workspace();
    let out = hetnr(tmp.path(), &["report", "-c", "run.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn train_fraction_reaches_splits() {
    let tmp = workspace();
    let d = tmp.path();
    ok(d, &["generate", "-c", "run.json"]);
    let mut cfg: RunConfig = serde_json::from_str(SMALL).unwrap();
    cfg.data.dir = d.join("data");
    cfg.data.cache_operators = false;
    let full = load_dataset(&cfg, d, Exec::Sequential).unwrap();
    cfg.eval.train_fraction = 0.25;
    let quarter = load_dataset(&cfg, d, Exec::Sequential).unwrap();
    let n_full = full.splits.folds[0].train.len();
    let n_quarter = quarter.splits.folds[0].train.len();
    assert!(n_quarter < n_full);
    assert!((n_quarter as f64 - 0.25 * n_full as f64).abs() <= 1.0);
    assert_eq!(full.splits.folds[0].test, quarter.splits.folds[0].test);
}

#[test]
fn operator_cache_is_transparent() {
    let tmp = workspace();
    let d = tmp.path();
    ok(d, &["generate", "-c", "run.json"]);
    let mut cfg: RunConfig = serde_json::from_str(SMALL).unwrap();
    cfg.data.dir = d.join("data");
    let fresh = load_dataset(&cfg, d, Exec::Sequential).unwrap();
    let cached = load_dataset(&cfg, d, Exec::Sequential).unwrap();
    assert!(d.join("cache/operators").exists());
    let model_a = fresh.model(&cfg).unwrap();
    let model_b = cached.model(&cfg).unwrap();
    let arch = hetnr::train::all_nodes_baseline(&fresh.space);
    let params = hetnr::model::init_params(&fresh.graph, &fresh.task, 8, 0).unwrap();
    let la = model_a.logits(&params, hetnr::model::ArchInput::Discrete(&arch)).unwrap();
    let lb = model_b.logits(&params, hetnr::model::ArchInput::Discrete(&arch)).unwrap();
    assert_eq!(la, lb);
}

fn entry(space: &SearchSpace, idx: &[usize], index: usize, score: f64) -> OracleEntry {
    OracleEntry {
        architecture: Architecture::from_indices(space, idx),
        index,
        mean_valid_macro_f1: score,
        valid_macro_f1: vec![score],
    }
}

#[test]
fn regret_is_best_minus_searched() {
    let space = hetnr::hop::build_search_space(&hetnr::hin::Schema::dblp(), "A", 2).unwrap();
    let ranking = vec![
        entry(&space, &[0, 1], 1, 0.80),
        entry(&space, &[0, 2], 2, 0.75),
        entry(&space, &[0, 0], 0, 0.30),
    ];
    let searched = Architecture::from_indices(&space, &[0, 2]);
    let c = compare_to_oracle(&ranking, &searched).unwrap();
    assert_eq!(c.searched_rank, 2);
    assert!((c.regret_points - 5.0).abs() < 1e-9);
    assert_eq!(c.best.per_hop[1], HopCandidate::types(2, &["A"]));
    let absent = Architecture::from_indices(&space, &[0, 3]);
    assert!(compare_to_oracle(&ranking, &absent).is_err());
}
