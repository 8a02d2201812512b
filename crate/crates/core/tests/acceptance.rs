//! End-to-end acceptance checks. Prints one PASS/FAIL/SKIP line per
//! criterion and exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{operator_oracle, out_lists, random_hin, walk_endpoints};
use hetnr::hin::{generate_synthetic, io, make_splits, HinGraph, Schema, SyntheticSpec, TargetTask};
use hetnr::hop::{
    build_hop_operator, build_search_space, khop_exact, khop_randomwalk, mean_jaccard, neighborhoods, HopCandidate,
    NeighborhoodMode, OperatorBank, SearchSpace, WalkConfig,
};
use hetnr::model::{
    grad_check_synthetic, init_params, ArchInput, ArchParams, Architecture, ForwardConfig, Model, Optimizer,
};
use hetnr::search::{exhaustive_oracle, search, selection_frequency, SearchConfig, Strategy};
use hetnr::train::{f1_scores, predictions, run_once, Method, TrainConfig};
use hetnr::Exec;
use ndarray::{arr2, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

struct Instance {
    graph: HinGraph,
    task: TargetTask,
    space: SearchSpace,
    bank: OperatorBank,
}

impl Instance {
    fn new(graph: HinGraph, task: TargetTask, k: usize) -> Self {
        let anchor = task.anchor_type().to_string();
        let space = build_search_space(graph.schema(), &anchor, k).unwrap();
        let nbs = neighborhoods(&graph, &anchor, k, NeighborhoodMode::Exact, Exec::default()).unwrap();
        let bank = OperatorBank::build(&graph, &space, &nbs, Exec::default()).unwrap();
        Instance {
            graph,
            task,
            space,
            bank,
        }
    }

    fn planted(spec: &SyntheticSpec, k: usize) -> Self {
        let (graph, task, _) = generate_synthetic(spec).unwrap();
        Self::new(graph, task, k)
    }

    fn model(&self, cfg: ForwardConfig) -> Model<'_> {
        Model::new(&self.graph, &self.space, &self.bank, cfg).unwrap()
    }
}

fn scaled(spec: SyntheticSpec, factor: f64) -> SyntheticSpec {
    let mut spec = spec;
    for v in spec.nodes_per_type.values_mut() {
        *v = (*v as f64 * factor).round() as usize;
    }
    for v in spec.edges_per_relation.values_mut() {
        *v = (*v as f64 * factor).round() as usize;
    }
    spec
}

fn adam_train(k: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        k,
        seed,
        optimizer: Optimizer::adam(),
        ..TrainConfig::default()
    }
}

fn adam_search(strategy: Strategy, seed: u64) -> SearchConfig {
    SearchConfig {
        strategy,
        seed,
        theta_optimizer: Optimizer::adam(),
        lambda_optimizer: Optimizer::adam(),
        ..SearchConfig::default()
    }
}

fn gradient_correctness() -> Outcome {
    let cfg = ForwardConfig {
        k: 3,
        ..ForwardConfig::default()
    };
    let spec = SyntheticSpec::tiny(1);
    let nodes: usize = spec.nodes_per_type.values().sum();
    let r = grad_check_synthetic(&spec, cfg, 1, 1e-5, 1e-4, false).unwrap();
    let msg = format!(
        "{nodes} nodes, {} coordinates, max rel err {:.2e}",
        r.coordinates, r.max_rel_err
    );
    if r.passed && r.max_rel_err < 1e-4 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn operator_exactness() -> Outcome {
    let mut checked = 0;
    for seed in 0..20 {
        let g = random_hin(1000 + seed, 50);
        let out = out_lists(&g);
        let a = g.schema().type_index("A").unwrap();
        for k in 1..=3 {
            let nb = khop_exact(&g, "A", k, Exec::default()).unwrap();
            for u in 0..g.node_count(a) {
                let want: Vec<usize> = walk_endpoints(&out, g.offset(a) + u, k).into_iter().collect();
                if nb.neighbors[u] != want {
                    return Outcome::Fail(format!("neighborhood differs: seed {seed} k {k} anchor {u}"));
                }
            }
            let space = build_search_space(g.schema(), "A", k).unwrap();
            for cand in space.candidates(k) {
                let types: Vec<usize> = cand
                    .type_names()
                    .iter()
                    .map(|t| g.schema().type_index(t).unwrap())
                    .collect();
                let got = build_hop_operator(&g, &nb, cand).unwrap().to_global(&g).to_dense();
                if got != operator_oracle(&g, a, k, &types) {
                    return Outcome::Fail(format!("operator differs: seed {seed} k {k} {cand}"));
                }
                checked += 1;
            }
        }
    }
    Outcome::Pass(format!("20 graphs, {checked} operators identical"))
}

fn endpoint_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let g = random_hin(2000 + trial % 10, 40);
        let a = g.schema().type_index("A").unwrap();
        let n = g.node_count(a);
        let task = TargetTask::new(&g, "A", (0..n).map(|i| i % 2).collect(), 2).unwrap();
        let inst = Instance::new(g, task, 3);
        let model = inst.model(ForwardConfig::default());
        let params = init_params(&inst.graph, &inst.task, 8, trial).unwrap();
        let idx: Vec<usize> = inst
            .space
            .candidate_counts()
            .iter()
            .map(|&m| rng.random_range(0..m))
            .collect();
        let lambda = ArchParams {
            per_hop: inst
                .space
                .candidate_counts()
                .iter()
                .zip(&idx)
                .map(|(&m, &i)| (0..m).map(|c| if c == i { 30.0 } else { -30.0 }).collect())
                .collect(),
        };
        let arch = Architecture::from_indices(&inst.space, &idx);
        let mixed = model.logits(&params, ArchInput::Lambda(&lambda)).unwrap();
        let discrete = model.logits(&params, ArchInput::Discrete(&arch)).unwrap();
        let scale = discrete.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let err = (&mixed - &discrete).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
        worst = worst.max(err);
    }
    let msg = format!("100 draws, max rel diff {worst:.2e}");
    if worst < 1e-10 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn space_enumeration() -> Outcome {
    let space = build_search_space(&Schema::dblp(), "A", 2).unwrap();
    let want = vec![
        vec![HopCandidate::zero(1), HopCandidate::types(1, &["P"])],
        vec![
            HopCandidate::zero(2),
            HopCandidate::types(2, &["A"]),
            HopCandidate::types(2, &["C"]),
            HopCandidate::types(2, &["A", "C"]),
        ],
    ];
    if space.per_hop() != want.as_slice() {
        return Outcome::Fail(format!("unexpected DBLP space {:?}", space.per_hop()));
    }
    let mut largest = 0;
    for seed in 0..200 {
        let g = random_hin(3000 + seed, 30);
        for anchor in g.schema().node_types() {
            let n = build_search_space(g.schema(), anchor, 3).unwrap().num_architectures();
            largest = largest.max(n);
        }
    }
    if largest > 512 {
        return Outcome::Fail(format!("a 3-type K=3 space has {largest} architectures"));
    }
    Outcome::Pass(format!("DBLP hops match; largest 3-type K=3 space {largest} <= 512"))
}

fn planted_recovery() -> Outcome {
    let mut hits: BTreeMap<&str, usize> = BTreeMap::new();
    let (mut searched_sum, mut all_sum) = (0.0, 0.0);
    for seed in 0..10u64 {
        let inst = Instance::planted(&SyntheticSpec::planted_default(seed), 3);
        let tc = adam_train(3, seed);
        let model = inst.model(tc.forward_config());
        let splits = make_splits(&inst.task, 5, 1.0, seed).unwrap();
        let fold = &splits.folds[0];
        for (name, strategy) in [("unrolled", Strategy::Unrolled), ("first-order", Strategy::FirstOrder)] {
            let (arch, _) = search(&model, &inst.task, fold, &adam_search(strategy, seed)).unwrap();
            if arch.per_hop[1].contains("C") {
                *hits.entry(name).or_default() += 1;
            }
            if strategy == Strategy::Unrolled {
                let s = run_once(&model, &inst.task, &Method::Fixed(arch), &tc, 0, fold, seed).unwrap();
                let b = run_once(&model, &inst.task, &Method::AllNodes, &tc, 0, fold, seed).unwrap();
                searched_sum += s.test.macro_f1;
                all_sum += b.test.macro_f1;
            }
        }
    }
    let gap = 100.0 * (searched_sum - all_sum) / 10.0;
    let (u, f) = (hits.get("unrolled").copied().unwrap_or(0), hits.get("first-order").copied().unwrap_or(0));
    let msg = format!(
        "hop-2 has C: unrolled {u}/10, first-order {f}/10; searched {:.2} vs all-nodes {:.2} Macro-F1 (gap {gap:.2})",
        10.0 * searched_sum,
        10.0 * all_sum
    );
    if u >= 8 && f >= 8 && gap >= 2.0 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn oracle_regret() -> Outcome {
    let mut within = 0;
    let mut regrets = Vec::new();
    for seed in 0..10u64 {
        let inst = Instance::planted(&scaled(SyntheticSpec::planted_default(seed), 2.5), 2);
        assert!(inst.space.num_architectures() <= 8);
        let tc = adam_train(2, seed);
        let model = inst.model(tc.forward_config());
        let splits = make_splits(&inst.task, 5, 1.0, seed).unwrap();
        let fold = &splits.folds[0];
        let (arch, _) = search(&model, &inst.task, fold, &adam_search(Strategy::Unrolled, seed)).unwrap();
        let ranking = exhaustive_oracle(&model, &inst.task, fold, &tc, &[seed], 8, Exec::default()).unwrap();
        let mine = ranking.iter().find(|e| e.architecture == arch).unwrap();
        let regret = 100.0 * (ranking[0].mean_valid_macro_f1 - mine.mean_valid_macro_f1);
        if regret <= 2.0 {
            within += 1;
        }
        regrets.push(format!("{regret:.2}"));
    }
    let msg = format!("{within}/10 within 2 points (regrets {})", regrets.join(", "));
    if within >= 7 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn walk_fidelity() -> Outcome {
    let spec = SyntheticSpec {
        nodes_per_type: [("A", 60), ("P", 120), ("C", 20)].map(|(k, v)| (k.to_string(), v)).into(),
        edges_per_relation: [("AP", 180), ("CP", 120)].map(|(k, v)| (k.to_string(), v)).into(),
        ..SyntheticSpec::planted_default(7)
    };
    let (g, _, _) = generate_synthetic(&spec).unwrap();
    let walks = WalkConfig {
        num_walks: 1000,
        walk_len: 4,
        seed: 7,
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for k in 1..=3 {
        let exact = khop_exact(&g, "A", k, Exec::default()).unwrap();
        let est = khop_randomwalk(&g, "A", k, &walks, Exec::default()).unwrap();
        let j = mean_jaccard(&est, &exact);
        ok &= j >= 0.9;
        parts.push(format!("k={k}: {j:.4}"));
    }
    let msg = format!("{} nodes, mean Jaccard {}", g.total_nodes(), parts.join(", "));
    if ok {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

fn metric_fixtures() -> Outcome {
    let logits = arr2(&[[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]]);
    let s = f1_scores(&[0, 1, 1], &predictions(&logits), 2).unwrap();
    let fixture = format!("{:.4}/{:.4}", s.macro_f1, s.micro_f1);
    if fixture != "0.6667/0.6667" {
        return Outcome::Fail(format!("fixture gave {fixture}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..1000 {
        let n = rng.random_range(1..50);
        let c = rng.random_range(2..6);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let logits = Array2::from_shape_fn((n, c), |_| rng.random::<f64>());
        let preds = predictions(&logits);
        let s = f1_scores(&labels, &preds, c).unwrap();
        let acc = labels.iter().zip(&preds).filter(|(a, b)| a == b).count() as f64 / n as f64;
        if (s.micro_f1 - acc).abs() > 1e-12 {
            return Outcome::Fail(format!("fixture {i}: micro {} vs accuracy {acc}", s.micro_f1));
        }
    }
    Outcome::Pass(format!("fixture {fixture}; micro-F1 = accuracy on 1000 random fixtures"))
}

const SMALL_RUN: &str = r#"{
  "data": {"synthetic": {"nodes_per_type": {"A": 60, "P": 120, "C": 9},
                         "edges_per_relation": {"AP": 180, "CP": 120}}},
  "model": {"k": 2, "hidden": 16},
  "search": {"max_epochs": 15,
             "theta_optimizer": {"kind": "adam", "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
             "lambda_optimizer": {"kind": "adam", "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}},
  "train": {"max_epochs": 15,
            "optimizer": {"kind": "adam", "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}},
  "eval": {"num_folds": 2, "seeds": [0, 1]}
}"#;

fn cli_pipeline(dir: &Path) -> Result<(), String> {
    std::fs::write(dir.join("run.json"), SMALL_RUN).map_err(|e| e.to_string())?;
    for cmd in ["generate", "search", "retrain", "eval", "oracle", "report"] {
        let out = Command::new(env!("CARGO_BIN_EXE_hetnr"))
            .current_dir(dir)
            .args([cmd, "-c", "run.json", "--no-timestamps", "--jobs", "2"])
            .env("RUST_LOG", "warn")
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{cmd}: {}", String::from_utf8_lossy(&out.stderr)));
        }
    }
    Ok(())
}

fn json_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, acc);
            } else if p.extension().is_some_and(|e| e == "json") {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                acc.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        if let Err(e) = cli_pipeline(d) {
            return Outcome::Fail(e);
        }
    }
    let (fa, fb) = (json_files(a.path()), json_files(b.path()));
    if fa.keys().ne(fb.keys()) {
        return Outcome::Fail("runs wrote different file sets".into());
    }
    let differing: Vec<&String> = fa.iter().filter(|(k, v)| fb[*k] != **v).map(|(k, _)| k).collect();
    if differing.is_empty() {
        Outcome::Pass(format!("{} JSON artifacts byte-identical across two runs", fa.len()))
    } else {
        Outcome::Fail(format!("differing artifacts: {differing:?}"))
    }
}

fn dblp_reference() -> Outcome {
    let Some(dir) = std::env::var_os("HETNR_DBLP_DIR") else {
        return Outcome::Skip("HETNR_DBLP_DIR not set".into());
    };
    let dir = Path::new(&dir);
    let graph = match io::load_dir(dir) {
        Ok(g) => g,
        Err(e) => return Outcome::Skip(format!("DBLP data not loadable: {e}")),
    };
    if graph.total_nodes() != 18_405 || graph.num_edges() != 67_946 {
        return Outcome::Skip(format!(
            "data has {} nodes / {} edges, expected 18405 / 67946",
            graph.total_nodes(),
            graph.num_edges()
        ));
    }
    let task = io::load_labels(&dir.join("labels.csv"), &graph, "A").unwrap();
    let inst = Instance::new(graph, task, 3);
    let tc = adam_train(3, 0);
    let model = inst.model(tc.forward_config());
    let splits = make_splits(&inst.task, 5, 1.0, 0).unwrap();
    let fold = &splits.folds[0];
    let archs: Vec<Architecture> = (0..10)
        .map(|s| search(&model, &inst.task, fold, &adam_search(Strategy::Unrolled, s)).unwrap().0)
        .collect();
    let mode = selection_frequency(&archs).unwrap().model_wise_mode().clone();
    let want = Architecture {
        per_hop: vec![
            HopCandidate::types(1, &["A", "P"]),
            HopCandidate::types(2, &["A", "C"]),
            HopCandidate::types(3, &["A", "P"]),
        ],
    };
    let mean = (0..10)
        .map(|s| {
            run_once(&model, &inst.task, &Method::Fixed(mode.clone()), &adam_train(3, s), 0, fold, s)
                .unwrap()
                .test
                .macro_f1
        })
        .sum::<f64>()
        * 10.0;
    let msg = format!("modal {mode}, retrained Macro-F1 {mean:.2}");
    if mode == want && (mean - 94.69).abs() <= 1.5 {
        Outcome::Pass(msg)
    } else {
        Outcome::Fail(msg)
    }
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient correctness", gradient_correctness, Some(Duration::from_secs(30))),
        ("operator exactness", operator_exactness, None),
        ("endpoint consistency", endpoint_consistency, None),
        ("search-space enumeration", space_enumeration, None),
        ("planted-signal recovery", planted_recovery, Some(Duration::from_secs(600))),
        ("oracle regret", oracle_regret, Some(Duration::from_secs(600))),
        ("random-walk fidelity", walk_fidelity, None),
        ("metric fixtures", metric_fixtures, None),
        ("determinism", determinism, None),
        ("DBLP reference", dblp_reference, None),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| *f == n.to_string() || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let mut outcome = check();
        let took = start.elapsed();
        if let (Outcome::Pass(m), Some(b)) = (&outcome, budget) {
            if took > *b {
                outcome = Outcome::Fail(format!("{m}; took {took:.1?}, budget {b:?}"));
            }
        }
        match outcome {
            Outcome::Pass(m) => println!("PASS {n:>2} {name}: {m} [{took:.1?}]"),
            Outcome::Skip(m) => println!("SKIP {n:>2} {name}: {m}"),
            Outcome::Fail(m) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {m} [{took:.1?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
