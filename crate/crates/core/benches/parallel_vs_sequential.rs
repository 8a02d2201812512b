use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hetnr::hin::{generate_synthetic, make_splits, SyntheticSpec};
use hetnr::hop::{build_search_space, khop_exact, khop_randomwalk, neighborhoods, NeighborhoodMode, OperatorBank, WalkConfig};
use hetnr::model::{Model, Optimizer};
use hetnr::search::exhaustive_oracle;
use hetnr::train::TrainConfig;
use hetnr::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn neighborhoods_and_operators(c: &mut Criterion) {
    let (g, _, _) = generate_synthetic(&SyntheticSpec::planted_default(0)).unwrap();
    let space = build_search_space(g.schema(), "A", 3).unwrap();
    let nbs = neighborhoods(&g, "A", 3, NeighborhoodMode::Exact, Exec::Sequential).unwrap();
    let walks = WalkConfig {
        num_walks: 1000,
        walk_len: 4,
        seed: 0,
    };

    let mut group = c.benchmark_group("hop");
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("khop_exact_k3", name), &exec, |b, &e| {
            b.iter(|| khop_exact(black_box(&g), "A", 3, e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("random_walk_k3", name), &exec, |b, &e| {
            b.iter(|| khop_randomwalk(black_box(&g), "A", 3, &walks, e).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("operator_bank", name), &exec, |b, &e| {
            b.iter(|| OperatorBank::build(black_box(&g), &space, &nbs, e).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let (g, task, _) = generate_synthetic(&SyntheticSpec::planted_default(0)).unwrap();
    let space = build_search_space(g.schema(), "A", 2).unwrap();
    let nbs = neighborhoods(&g, "A", 2, NeighborhoodMode::Exact, Exec::Sequential).unwrap();
    let bank = OperatorBank::build(&g, &space, &nbs, Exec::Sequential).unwrap();
    let cfg = TrainConfig {
        k: 2,
        hidden: 16,
        max_epochs: 20,
        optimizer: Optimizer::adam(),
        ..TrainConfig::default()
    };
    let model = Model::new(&g, &space, &bank, cfg.forward_config()).unwrap();
    let fold = make_splits(&task, 5, 1.0, 0).unwrap().folds.remove(0);

    let mut group = c.benchmark_group("oracle");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("8_architectures_2_seeds", name), &exec, |b, &e| {
            b.iter(|| exhaustive_oracle(&model, &task, &fold, &cfg, &[0, 1], 8, e).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, neighborhoods_and_operators, oracle);
criterion_main!(benches);
