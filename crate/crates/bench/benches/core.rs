use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use grassdyn::dynamics::subspace_orbit_min_distance;
use grassdyn::functionals::FunctionalTable;
use grassdyn::grassmann::{grassmann_distance, push_forward};
use grassdyn::{AdmissibleSource, ConstructionParams, IndexScheme};
use grassdyn_bench::{construction, plane, two_b};

fn distance(c: &mut Criterion) {
    let mut g = c.benchmark_group("grassmann_distance");
    for (dim, n) in [(16, 2), (64, 2), (256, 4)] {
        let (a, b) = (plane(dim, n, 1), plane(dim, n, 2));
        g.bench_with_input(BenchmarkId::from_parameter(format!("{dim}x{n}")), &(a, b), |bench, (a, b)| {
            bench.iter(|| grassmann_distance(black_box(a), black_box(b)).unwrap())
        });
    }
    g.finish();
}

fn orbit(c: &mut Criterion) {
    let op = two_b(64);
    let l = plane(64, 2, 3);
    c.bench_function("push_forward 2B dim 64", |b| b.iter(|| push_forward(black_box(&op), black_box(&l)).unwrap()));
    let target = plane(64, 2, 4);
    c.bench_function("subspace orbit 2B dim 64 K 50", |b| {
        b.iter(|| subspace_orbit_min_distance(&op, &l, &target, black_box(50)).unwrap())
    });
}

fn exact(c: &mut Criterion) {
    let params = ConstructionParams::new(2, IndexScheme::Pow5, AdmissibleSource::Triangular);
    c.bench_function("phi prefix p=2 pow5 i<=200", |b| {
        b.iter(|| FunctionalTable::new(&params, 1).unwrap().prefix(black_box(200)).unwrap())
    });
    c.bench_function("orbit vector p=2 pow5 i=125", |b| {
        b.iter(|| construction(2, IndexScheme::Pow5).orbit_vector(black_box(125)).unwrap())
    });
}

criterion_group!(benches, distance, orbit, exact);
criterion_main!(benches);
