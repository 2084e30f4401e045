//! Pairwise neural learning to rank.
//!
//! A ranker consists of one feature network `f` shared by both documents of
//! a pair and a bias-free output neuron applied to `f(x) - f(y)` through an
//! odd, sign-conserving activation. The induced relation is reflexive,
//! antisymmetric and transitive, so a single score per document is enough to
//! sort a list.
//!
//! Modules:
//! - [`net`]: dense network, backpropagation, Adam.
//! - [`model`]: the ranker itself (`score`, `rank_pair`, `sort_documents`).
//! - [`training`]: pair construction, costs, the minibatch loop.
//! - [`metrics`]: NDCG@k, MAP and friends.
//! - [`letor`]: LETOR file handling, binarization, normalization, folds.
//! - [`synthetic`]: Gaussian class-conditional datasets with label noise.
//! - [`experiments`]: grid search, the synthetic protocol, sweeps, peaks.
//! - [`config`]: flat `key = value` configuration files.

pub mod config;
pub mod error;
pub mod experiments;
pub mod letor;
pub mod metrics;
pub mod model;
pub mod net;
pub mod rng;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
pub use letor::{Dataset, Document, Query};
pub use metrics::{Metric, MetricReport};
pub use model::{DirectRanker, OutputHead, Tau};
pub use net::{Activation, AdamConfig, FeatureNet};
pub use training::{train, Cost, Pairing, TrainConfig, TrainingLog};
