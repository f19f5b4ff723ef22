use cdd_bench::uniform_cloud;
use cdd_core::{assign_brute, assign_kdtree};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn assignment(c: &mut Criterion) {
    let mut group = c.benchmark_group("assign");
    group.sample_size(10);
    for n in [1024, 4096, 16384] {
        let a = uniform_cloud(n, 1);
        let b = uniform_cloud(n, 2);
        group.bench_with_input(BenchmarkId::new("kdtree", n), &n, |bench, _| {
            bench.iter(|| assign_kdtree(&a, &b).unwrap())
        });
        if n <= 4096 {
            group.bench_with_input(BenchmarkId::new("brute", n), &n, |bench, _| {
                bench.iter(|| assign_brute(&a, &b).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, assignment);
criterion_main!(benches);
