//! Minibatch training of the ranker on ordered document pairs.

mod cost;
mod pairs;

pub use cost::{cost_cross_entropy, cost_squared, Cost};
pub use pairs::{build_pairs, DocRef, PairSet, Pairing, TrainPair};

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::letor::Dataset;
use crate::model::{DirectRanker, Tau};
use crate::net::{dot, Activation, AdamConfig, AdamState, ForwardCache, NetGradients};
use crate::rng::{substream, tag};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Widths of the feature-net layers; the last one is the dimension of
    /// the vectors whose difference feeds the output neuron.
    pub hidden_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    /// Activation of the feature net's last layer.
    pub feature_activation: Activation,
    pub tau: Tau,
    pub cost: Cost,
    pub pairing: Pairing,
    pub epochs: usize,
    pub batch_size: usize,
    /// Pair budget per query and epoch; `None` uses every eligible pair.
    pub pairs_per_query: Option<usize>,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Stop once the mean epoch cost improved by less than this for
    /// `patience` consecutive epochs. `None` disables early stopping.
    pub early_stop_tol: Option<f64>,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_sizes: vec![64],
            hidden_activation: Activation::Tanh,
            feature_activation: Activation::Tanh,
            tau: Tau::Identity,
            cost: Cost::CrossEntropy,
            pairing: Pairing::Adjacent,
            epochs: 30,
            batch_size: 128,
            pairs_per_query: Some(200),
            seed: 0,
            adam: AdamConfig::default(),
            early_stop_tol: Some(1e-6),
            patience: 1,
        }
    }
}

impl TrainConfig {
    /// Topology and cost used for the synthetic experiments: a 70-unit
    /// hidden layer, a layer with one unit per relevance class, squared cost
    /// on adjacent-grade pairs.
    pub fn synthetic(n_classes: usize) -> Self {
        TrainConfig {
            hidden_sizes: vec![70, n_classes.max(1)],
            cost: Cost::Squared,
            pairing: Pairing::Adjacent,
            epochs: 10,
            pairs_per_query: Some(20_000),
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::invalid(
                "hidden_sizes must be a non-empty list of positive widths",
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if self.pairs_per_query == Some(0) {
            return Err(Error::invalid("pairs_per_query must be >= 1"));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be >= 1"));
        }
        if let Some(t) = self.early_stop_tol {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::invalid("early_stop_tol must be a non-negative number"));
            }
        }
        self.adam.validate()
    }

    /// Freshly initialized model for `input_dim` features.
    pub fn init_model(&self, input_dim: usize) -> Result<DirectRanker> {
        let mut rng = substream(self.seed, tag::INIT);
        DirectRanker::init(
            input_dim,
            &self.hidden_sizes,
            self.hidden_activation,
            self.feature_activation,
            self.tau,
            &mut rng,
        )
    }
}

/// Gradient tape for the whole ranker: shared net plus head weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RankerGradients {
    pub net: NetGradients,
    pub head: Vec<f64>,
}

impl RankerGradients {
    pub fn zeros_like(model: &DirectRanker) -> Self {
        RankerGradients {
            net: NetGradients::zeros_like(model.feature_net()),
            head: vec![0.0; model.head().weights().len()],
        }
    }

    pub fn reset(&mut self) {
        self.net.reset();
        self.head.fill(0.0);
    }

    pub fn scale(&mut self, factor: f64) {
        self.net.scale(factor);
        self.head.iter_mut().for_each(|g| *g *= factor);
    }

    /// Same order as [`DirectRanker::param_blocks_mut`].
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut b = self.net.blocks();
        b.push(&self.head);
        b
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks().concat()
    }
}

/// Reusable forward buffers for one pair.
#[derive(Debug, Default)]
pub struct PairScratch {
    first: ForwardCache,
    second: ForwardCache,
}

/// Adds the gradient of one pair's cost to `grads` and returns the cost.
///
/// The pair is `(first, second)`; with `direction = 1.0` the first document
/// is the more relevant one, with `-1.0` the second. The difference
/// `direction * (g(first) - g(second))` is what the cost sees. Both branch
/// evaluations backpropagate into the same tape, the second one through the
/// negated side of the difference node.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_pair_gradient(
    model: &DirectRanker,
    first: &[f64],
    second: &[f64],
    direction: f64,
    high_grade: u32,
    cost: Cost,
    scratch: &mut PairScratch,
    grads: &mut RankerGradients,
) -> Result<f64> {
    let net = model.feature_net();
    net.forward_into(first, &mut scratch.first)?;
    net.forward_into(second, &mut scratch.second)?;
    let w = model.head().weights();
    let g1 = dot(w, scratch.first.output());
    let g2 = dot(w, scratch.second.output());
    let delta = direction * (g1 - g2);
    let (c, dc_ddelta) = cost.evaluate(delta, model.tau(), high_grade);
    let s = direction * dc_ddelta;

    for ((gh, a), b) in grads
        .head
        .iter_mut()
        .zip(scratch.first.output())
        .zip(scratch.second.output())
    {
        *gh += s * (a - b);
    }
    let up_first: Vec<f64> = w.iter().map(|wi| s * wi).collect();
    let up_second: Vec<f64> = w.iter().map(|wi| -(s * wi)).collect();
    net.backward(&scratch.first, &up_first, &mut grads.net)?;
    net.backward(&scratch.second, &up_second, &mut grads.net)?;
    Ok(c)
}

/// Cost and full parameter gradient of a single ordered pair.
pub fn pair_loss_and_gradient(
    model: &DirectRanker,
    high: &[f64],
    low: &[f64],
    high_grade: u32,
    cost: Cost,
) -> Result<(f64, RankerGradients)> {
    let mut grads = RankerGradients::zeros_like(model);
    let mut scratch = PairScratch::default();
    let c = accumulate_pair_gradient(model, high, low, 1.0, high_grade, cost, &mut scratch, &mut grads)?;
    Ok((c, grads))
}

/// Cost of one ordered pair without gradients.
pub fn pair_loss(model: &DirectRanker, high: &[f64], low: &[f64], high_grade: u32, cost: Cost) -> Result<f64> {
    let delta = model.score(high)? - model.score(low)?;
    Ok(cost.evaluate(delta, model.tau(), high_grade).0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_cost: f64,
    pub n_pairs: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub warnings: Vec<String>,
    pub stopped_early: bool,
}

pub const TRAINING_LOG_HEADER: &str = "epoch,mean_cost,wall_seconds";

impl TrainingLog {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{TRAINING_LOG_HEADER}")?;
        for e in &self.epochs {
            writeln!(out, "{},{},{:.6}", e.epoch, e.mean_cost, e.wall_seconds)?;
        }
        Ok(())
    }

    pub fn final_cost(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.mean_cost)
    }
}

/// Trains a fresh model on `data`.
///
/// Each epoch draws a new pair set (per-query budget, seeded), shuffles it,
/// and applies one Adam step per minibatch on the batch-mean gradient.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<(DirectRanker, TrainingLog)> {
    config.validate()?;
    if data.feature_dim() == 0 {
        return Err(Error::invalid("training data has no features"));
    }
    let mut model = config.init_model(data.feature_dim())?;
    let mut log = TrainingLog::default();
    if config.epochs == 0 {
        return Ok((model, log));
    }

    let block_sizes: Vec<usize> = model.param_blocks().iter().map(|b| b.len()).collect();
    let mut adam = AdamState::new(config.adam, &block_sizes)?;
    let mut grads = RankerGradients::zeros_like(&model);
    let mut scratch = PairScratch::default();
    let mut pair_rng = substream(config.seed, tag::PAIRS);
    let start = Instant::now();
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 1..=config.epochs {
        let mut set = build_pairs(data, config.pairing, config.pairs_per_query, &mut pair_rng);
        if let Some(w) = set.warning.take() {
            if !log.warnings.contains(&w) {
                log.warnings.push(w);
            }
        }
        if set.pairs.is_empty() {
            return Err(Error::invalid(
                "training data yields no pairs (every query has a single grade)",
            ));
        }
        set.pairs.shuffle(&mut pair_rng);

        let mut epoch_cost = 0.0;
        for (b, batch) in set.pairs.chunks(config.batch_size).enumerate() {
            grads.reset();
            let mut batch_cost = 0.0;
            for p in batch {
                let high = &data.queries()[p.high.query].docs[p.high.doc];
                let low = &data.queries()[p.low.query].docs[p.low.doc];
                debug_assert!(high.grade > low.grade, "pair is not ordered by grade");
                debug_assert_eq!(p.high.query, p.low.query);
                batch_cost += accumulate_pair_gradient(
                    &model,
                    &high.features,
                    &low.features,
                    1.0,
                    p.high_grade,
                    config.cost,
                    &mut scratch,
                    &mut grads,
                )?;
            }
            if !batch_cost.is_finite() {
                return Err(Error::NonFinite(format!(
                    "cost of epoch {epoch} batch {b} is {batch_cost}"
                )));
            }
            grads.scale(1.0 / batch.len() as f64);
            adam.step(&mut model.param_blocks_mut(), &grads.blocks())
                .map_err(|e| Error::NonFinite(format!("epoch {epoch} batch {b}: {e}")))?;
            epoch_cost += batch_cost;
        }

        let mean_cost = epoch_cost / set.pairs.len() as f64;
        log.epochs.push(EpochRecord {
            epoch,
            mean_cost,
            n_pairs: set.pairs.len(),
            wall_seconds: start.elapsed().as_secs_f64(),
        });

        if let Some(tol) = config.early_stop_tol {
            if best - mean_cost < tol {
                stale += 1;
                if stale >= config.patience {
                    log.stopped_early = epoch < config.epochs;
                    break;
                }
            } else {
                stale = 0;
            }
        }
        best = best.min(mean_cost);
    }
    Ok((model, log))
}
