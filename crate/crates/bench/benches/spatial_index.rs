use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use locgauss::testkit::uniform_points;
use locgauss::{AxisBox, SpatialIndex};
use std::hint::black_box;

fn bench_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("index_build");
    for n in [10_000, 100_000] {
        let points = uniform_points(1, n, 2, 0.0, 100.0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &points, |b, p| {
            b.iter(|| SpatialIndex::build(black_box(p)))
        });
    }
    group.finish();
}

fn bench_query(c: &mut Criterion) {
    let points = uniform_points(2, 100_000, 2, 0.0, 100.0);
    let index = SpatialIndex::build(&points);
    let query = AxisBox::new(vec![50.0, 50.0], 2.5).unwrap();
    c.bench_function("range_query_100k", |b| {
        b.iter(|| index.range_query(black_box(&query)).unwrap())
    });
    c.bench_function("count_in_box_100k", |b| {
        b.iter(|| index.count_in_box(black_box(&query)).unwrap())
    });
}

criterion_group!(benches, bench_build, bench_query);
criterion_main!(benches);
