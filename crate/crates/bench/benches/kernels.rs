use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wdro_core::analytic::{f_epsilon, scan_stationary_points, UniformModel};
use wdro_core::data::generate_separable;
use wdro_core::dro::{cvar_distance, worst_case_prob_dual, worst_case_prob_knapsack};
use wdro_core::solve::{minimize, Objective};
use wdro_core::{EmpiricalObjective, Hyperplane, LossSpec, ObjectiveSpec, SolveOptions};

fn tilted(d: usize) -> Hyperplane {
    let mut w = vec![0.05; d];
    w[0] = 1.0;
    Hyperplane::new(w, 0.1)
}

fn objective(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective_value_grad");
    for n in [1_000, 10_000, 100_000] {
        let ds = generate_separable(n, 10, 1).unwrap();
        let spec = ObjectiveSpec::squared(LossSpec::smoothed_ramp(0.02).unwrap(), 0.1).unwrap();
        let obj = EmpiricalObjective::new(spec, &ds).unwrap();
        let x = tilted(10).stacked();
        let mut grad = vec![0.0; obj.dim()];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| obj.value_grad(black_box(&x), &mut grad).unwrap())
        });
    }
    group.finish();
}

fn oracles(c: &mut Criterion) {
    let ds = generate_separable(10_000, 10, 2).unwrap();
    let h = tilted(10);
    c.bench_function("worst_case_dual_10k", |b| {
        b.iter(|| worst_case_prob_dual(&ds, black_box(&h), 0.1).unwrap())
    });
    c.bench_function("worst_case_knapsack_10k", |b| {
        b.iter(|| worst_case_prob_knapsack(&ds, black_box(&h), 0.1).unwrap())
    });
    c.bench_function("cvar_10k", |b| {
        b.iter(|| cvar_distance(&ds, black_box(&h), 0.1).unwrap())
    });
}

fn analytic(c: &mut Criterion) {
    let model = UniformModel::new(0.3).unwrap();
    c.bench_function("f_epsilon", |b| b.iter(|| f_epsilon(&model, black_box([0.7, 0.4]))));
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.bench_function("grid_300", |b| {
        b.iter(|| scan_stationary_points(&model, -3.0, 3.0, 300).unwrap())
    });
    group.finish();
}

fn solve(c: &mut Criterion) {
    let ds = generate_separable(10_000, 10, 3).unwrap();
    let spec = ObjectiveSpec::squared(LossSpec::smoothed_ramp(0.02).unwrap(), 0.1).unwrap();
    let obj = EmpiricalObjective::new(spec, &ds).unwrap();
    let mut x0 = vec![0.0; obj.dim()];
    x0[0] = 1.0;
    let opts = SolveOptions::default();
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    group.bench_function("cg_10k", |b| b.iter(|| minimize(&obj, black_box(&x0), &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, objective, oracles, analytic, solve);
criterion_main!(benches);
