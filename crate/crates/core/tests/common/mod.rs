#![allow(dead_code)]

use rand::RngExt;
use ranker_core::rng::rng_from_seed;
use ranker_core::{Activation, Dataset, DirectRanker, Document, Tau};

pub fn random_model(seed: u64, input_dim: usize, widths: &[usize], tau: Tau) -> DirectRanker {
    DirectRanker::init(
        input_dim,
        widths,
        Activation::Tanh,
        Activation::Tanh,
        tau,
        &mut rng_from_seed(seed),
    )
    .unwrap()
}

pub fn random_vectors(seed: u64, n: usize, dim: usize, scale: f64) -> Vec<Vec<f64>> {
    let mut rng = rng_from_seed(seed);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-scale..scale)).collect())
        .collect()
}

/// One query whose documents get grades `0..n_grades` cyclically.
pub fn random_query_dataset(seed: u64, n_docs: usize, dim: usize, n_grades: u32) -> Dataset {
    let docs = random_vectors(seed, n_docs, dim, 1.0)
        .into_iter()
        .enumerate()
        .map(|(i, x)| Document::new(i as u32 % n_grades, 1, x))
        .collect();
    Dataset::from_documents(docs).unwrap()
}
