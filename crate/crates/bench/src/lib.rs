//! Shared fixtures for the benchmarks.

use skelaug::ingest::generate_synthetic;
use skelaug::pipeline::learn_priors;
use skelaug::{AugmentConfig, Corpus, PriorSet, SyntheticSpec};

/// A synthetic corpus of `n` sequences at 64 frames and 25 joints.
pub fn corpus(n: usize, seed: u64) -> Corpus {
    generate_synthetic(&SyntheticSpec {
        n_sequences: n,
        n_rest_poses: 3,
        seed,
        ..SyntheticSpec::default()
    })
    .expect("default synthetic spec is valid")
}

/// Priors learned with default settings from a small synthetic corpus.
pub fn priors(seed: u64) -> PriorSet {
    let cfg = AugmentConfig {
        seed,
        ..AugmentConfig::default()
    };
    learn_priors(&corpus(60, seed), &cfg)
        .expect("synthetic corpus supports default priors")
        .0
}
