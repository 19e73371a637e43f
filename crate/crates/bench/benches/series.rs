use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use markov_up_core::{bound_set, power_series, q_bar, theorem_bound, BenchmarkModelSpec};

fn series(c: &mut Criterion) {
    let mut group = c.benchmark_group("power_series");
    for q in [0.5, 0.9, 0.99] {
        group.bench_with_input(BenchmarkId::from_parameter(q), &q, |b, &q| {
            b.iter(|| power_series(black_box(3), black_box(q), 1e-10).unwrap());
        });
    }
    group.finish();
}

fn constants(c: &mut Criterion) {
    let spec = BenchmarkModelSpec::new(0.5, 0.5, 0.5, 5).unwrap();
    c.bench_function("q_bar", |b| b.iter(|| q_bar(black_box(&spec.kappa), 1e-10).unwrap()));
    c.bench_function("bound_set/m=3", |b| {
        b.iter(|| bound_set(black_box(3), &spec, 1e-10).unwrap())
    });
    let set = bound_set(3, &spec, 1e-10).unwrap();
    c.bench_function("theorem_bound/m=3/x=20", |b| {
        b.iter(|| theorem_bound(3, black_box(20), &set).unwrap())
    });
}

criterion_group!(benches, series, constants);
criterion_main!(benches);
