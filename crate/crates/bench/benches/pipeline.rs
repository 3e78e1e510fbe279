use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use krylov_toda::{eigendecompose, flow, lanczos, Deformation, FlowOptions, Propagator};
use krylov_toda_bench::sample_measure;

fn bench_lanczos(c: &mut Criterion) {
    let mut g = c.benchmark_group("lanczos");
    for d in [50, 200, 800] {
        let m = sample_measure(d);
        g.bench_with_input(BenchmarkId::from_parameter(d), &m, |b, m| b.iter(|| lanczos(black_box(m)).unwrap()));
    }
    g.finish();
}

fn bench_eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigen");
    for d in [50, 200, 800] {
        let op = lanczos(&sample_measure(d)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(d), &op, |b, op| {
            b.iter(|| eigendecompose(black_box(op)).unwrap())
        });
    }
    g.finish();
}

fn bench_flow(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow");
    g.sample_size(10);
    for d in [50, 200] {
        let op = lanczos(&sample_measure(d)).unwrap();
        let path = [Deformation::identity(), Deformation::gibbs(2.0)];
        g.bench_with_input(BenchmarkId::from_parameter(d), &op, |b, op| {
            b.iter(|| flow(black_box(op), &path, &FlowOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn bench_evolve(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolve");
    for d in [50, 200, 800] {
        let p = Propagator::new(&lanczos(&sample_measure(d)).unwrap()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(d), &p, |b, p| b.iter(|| p.state(black_box(3.7))));
    }
    g.finish();
}

criterion_group!(benches, bench_lanczos, bench_eigen, bench_flow, bench_evolve);
criterion_main!(benches);
