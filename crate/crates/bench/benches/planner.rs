use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use splitplan_core::nsga2::non_dominated_sort;
use splitplan_core::profile::bundled;
use splitplan_core::{enumerate, evolve, true_selection, GaConfig, Normalization, ProblemInstance};

const MODELS: [&str; 3] = ["alexnet", "vgg16", "mobilenet_v2"];

fn bench_evolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve");
    for name in MODELS {
        let instance = ProblemInstance::reference(bundled(name).unwrap());
        let config = GaConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(name), &instance, |b, inst| {
            b.iter(|| evolve(black_box(inst), &config).unwrap())
        });
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    for name in MODELS {
        let instance = ProblemInstance::reference(bundled(name).unwrap());
        group.bench_with_input(BenchmarkId::new("enumerate", name), &instance, |b, inst| {
            b.iter(|| enumerate(black_box(inst)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("true_selection", name), &instance, |b, inst| {
            b.iter(|| true_selection(black_box(inst), Normalization::Vector).unwrap())
        });
    }
    group.finish();
}

fn bench_sort(c: &mut Criterion) {
    let mut group = c.benchmark_group("non_dominated_sort");
    for n in [40usize, 200, 1000] {
        // Points on a few interleaved anti-diagonals give several fronts.
        let points: Vec<[f64; 3]> = (0..n)
            .map(|i| {
                let x = (i * 7919 % n) as f64;
                let layer = (i % 5) as f64;
                [x + layer, n as f64 - x + layer, (i % 13) as f64]
            })
            .collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &points, |b, pts| {
            b.iter(|| non_dominated_sort(black_box(pts)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_evolve, bench_oracle, bench_sort);
criterion_main!(benches);
