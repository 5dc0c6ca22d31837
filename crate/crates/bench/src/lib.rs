//! Shared fixtures for the benchmarks.

use dagforge_core::synth::{generate, GraphModel, GraphSpec, SemSpec};
use dagforge_core::{Dag, Dataset, PotentialVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Linear-Gaussian ER-2 data on `d` nodes with its true graph.
pub fn linear_fixture(d: usize, n: usize, seed: u64) -> (Dataset, Dag) {
    let data = generate(&GraphSpec::new(d, GraphModel::Er, 2, seed), &SemSpec::linear(n))
        .expect("valid fixture settings");
    let truth = data.meta.as_ref().and_then(|m| m.graph.clone()).expect("simulated data records its graph");
    (data, truth)
}

/// Potential vector with standard-normal-ish entries.
pub fn random_potential(d: usize, seed: u64) -> PotentialVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = dagforge_core::potential_len(d);
    PotentialVec::new(d, (0..len).map(|_| rng.random_range(-3.0..3.0)).collect()).expect("right length")
}
