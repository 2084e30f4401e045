//! Benchmark fixtures shared by the criterion targets.

use ranker_core::rng::rng_from_seed;
use ranker_core::synthetic::{generate, SyntheticConfig};
use ranker_core::{Activation, Dataset, DirectRanker, Tau};

/// The synthetic-experiment topology: 70 inputs, 70 hidden units, 5 outputs.
pub fn synthetic_model(seed: u64) -> DirectRanker {
    DirectRanker::init(
        70,
        &[70, 5],
        Activation::Tanh,
        Activation::Tanh,
        Tau::Identity,
        &mut rng_from_seed(seed),
    )
    .expect("valid topology")
}

pub fn synthetic_train(train_size: usize) -> Dataset {
    let config = SyntheticConfig {
        train_size,
        test_size: 5,
        ..SyntheticConfig::default()
    };
    generate(&config).expect("valid config").train
}
