use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dagforge_bench::linear_fixture;
use dagforge_core::gp::{gp_ssr, GpConfig};
use dagforge_core::{score, ScoreCache, ScoreConfig, ScoreKind};

fn bic_cold_and_warm(c: &mut Criterion) {
    let mut group = c.benchmark_group("bic_ev_score");
    for d in [10, 30] {
        let (data, truth) = linear_fixture(d, 1000, 0);
        let cfg = ScoreConfig::new(ScoreKind::BicEv);
        group.bench_with_input(BenchmarkId::new("cold", d), &truth, |b, g| {
            b.iter(|| score(&data, black_box(g), &cfg, &ScoreCache::disabled()).unwrap())
        });
        let warm = ScoreCache::unbounded();
        score(&data, &truth, &cfg, &warm).unwrap();
        group.bench_with_input(BenchmarkId::new("cached", d), &truth, |b, g| {
            b.iter(|| score(&data, black_box(g), &cfg, &warm).unwrap())
        });
    }
    group.finish();
}

fn gp_regression(c: &mut Criterion) {
    let mut group = c.benchmark_group("gp_ssr");
    group.sample_size(10);
    for n in [100, 300] {
        let (data, truth) = linear_fixture(5, n, 0);
        let node = (0..5).max_by_key(|&j| truth.parents(j).len()).unwrap();
        let parents = truth.parents(node);
        let cfg = GpConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &parents, |b, p| {
            b.iter(|| gp_ssr(&data, node, black_box(p), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bic_cold_and_warm, gp_regression);
criterion_main!(benches);
