use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dagforge_bench::random_potential;
use dagforge_core::policy::sample_actions;
use dagforge_core::{vec_to_dag, PolicyParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn decode(c: &mut Criterion) {
    let mut group = c.benchmark_group("vec_to_dag");
    for d in [10, 50, 100, 200] {
        let z = random_potential(d, 1);
        group.bench_with_input(BenchmarkId::from_parameter(d), &z, |b, z| b.iter(|| vec_to_dag(black_box(z))));
    }
    group.finish();
}

// One policy batch: 64 draws plus decoding, the per-update sampling cost.
fn sample_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_batch_64");
    for d in [10, 50, 100] {
        let params = PolicyParams::new(d);
        group.bench_with_input(BenchmarkId::from_parameter(d), &params, |b, params| {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            b.iter(|| {
                sample_actions(params, 64, &mut rng)
                    .iter()
                    .map(|a| vec_to_dag(&a.clamped).edge_count())
                    .sum::<usize>()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, decode, sample_batch);
criterion_main!(benches);
