use cdd_core::{build_reference_distribution, default_grid, grid_search, DistillConfig, ReferenceSource, WeightingKind};
use criterion::{criterion_group, criterion_main, Criterion};

fn search(c: &mut Criterion) {
    let cfg = DistillConfig::default();
    let dist = build_reference_distribution(&ReferenceSource::default(), &cfg).unwrap();
    let mut group = c.benchmark_group("grid_search");
    for kind in WeightingKind::ALL {
        let grid = default_grid(kind);
        group.bench_function(kind.name(), |b| b.iter(|| grid_search(&grid, &cfg, &dist).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, search);
criterion_main!(benches);
