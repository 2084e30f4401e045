use std::time::Instant;

use rand::seq::index;
use rand::RngExt;

use crate::config::{parse_value, Configurable, KeyValues};
use crate::error::{Error, Result};
use crate::letor::NormalizationStats;
use crate::metrics::{mean_metric, ndcg_at_k};
use crate::model::order_by_score;
use crate::rng::{derive_seed, substream, tag};
use crate::synthetic::{generate, SyntheticConfig};
use crate::training::{train, TrainConfig};

/// Evaluation protocol on synthetic data: per dataset repeat, score
/// `n_subsets` random test subsets of `subset_min..=subset_max` documents
/// with NDCG@k; report the mean over repeats and its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProtocolConfig {
    pub subset_min: usize,
    pub subset_max: usize,
    pub k: usize,
    pub n_subsets: usize,
    pub n_repeats: usize,
    /// Standardize features with training-split statistics before training.
    pub normalize: bool,
    /// Give up after this many consecutive single-grade subset draws.
    pub max_redraws: usize,
}

impl Default for SyntheticProtocolConfig {
    fn default() -> Self {
        SyntheticProtocolConfig {
            subset_min: 50,
            subset_max: 150,
            k: 20,
            n_subsets: 50,
            n_repeats: 5,
            normalize: true,
            max_redraws: 1000,
        }
    }
}

impl SyntheticProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subset_min < 2 || self.subset_min > self.subset_max {
            return Err(Error::invalid(
                "subset sizes must satisfy 2 <= subset_min <= subset_max",
            ));
        }
        if self.k == 0 || self.n_subsets == 0 || self.n_repeats == 0 {
            return Err(Error::invalid("k, n_subsets and n_repeats must be positive"));
        }
        Ok(())
    }
}

pub const PROTOCOL_KEYS: &[&str] = &["subset_min", "subset_max", "k", "n_subsets", "n_repeats", "normalize"];

impl Configurable for SyntheticProtocolConfig {
    fn set_key(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "subset_min" => self.subset_min = parse_value(key, value)?,
            "subset_max" => self.subset_max = parse_value(key, value)?,
            "k" => self.k = parse_value(key, value)?,
            "n_subsets" => self.n_subsets = parse_value(key, value)?,
            "n_repeats" => self.n_repeats = parse_value(key, value)?,
            "normalize" => self.normalize = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn to_key_values(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("subset_min", self.subset_min.to_string());
        kv.set("subset_max", self.subset_max.to_string());
        kv.set("k", self.k.to_string());
        kv.set("n_subsets", self.n_subsets.to_string());
        kv.set("n_repeats", self.n_repeats.to_string());
        kv.set("normalize", self.normalize.to_string());
        kv
    }
}

/// Mean NDCG@k of randomly drawn test subsets sorted by `scores`.
///
/// Subsets are drawn without replacement; subsets in which every document
/// has the same grade have no ideal ordering and are redrawn.
pub fn evaluate_subsets<R: rand::Rng + ?Sized>(
    scores: &[f64],
    grades: &[u32],
    proto: &SyntheticProtocolConfig,
    rng: &mut R,
) -> Result<f64> {
    proto.validate()?;
    if scores.len() != grades.len() {
        return Err(Error::DimensionMismatch {
            expected: grades.len(),
            actual: scores.len(),
        });
    }
    let n = grades.len();
    if n < 2 {
        return Err(Error::invalid("need at least two test documents"));
    }
    let (lo, hi) = (proto.subset_min.min(n), proto.subset_max.min(n));
    let mut values = Vec::with_capacity(proto.n_subsets);
    let mut redraws = 0;
    while values.len() < proto.n_subsets {
        let size = rng.random_range(lo..=hi);
        let picked = index::sample(rng, n, size).into_vec();
        let sub_grades: Vec<u32> = picked.iter().map(|&i| grades[i]).collect();
        if sub_grades.iter().all(|&g| g == sub_grades[0]) {
            redraws += 1;
            if redraws > proto.max_redraws {
                return Err(Error::invalid("test set keeps yielding single-grade subsets"));
            }
            continue;
        }
        redraws = 0;
        let sub_scores: Vec<f64> = picked.iter().map(|&i| scores[i]).collect();
        let ranked: Vec<u32> = order_by_score(&sub_scores).into_iter().map(|i| sub_grades[i]).collect();
        match ndcg_at_k(&ranked, proto.k)? {
            Some(v) => values.push(v),
            // only possible when every grade is 0, i.e. the subset is uniform
            None => unreachable!("non-uniform subset has positive ideal DCG"),
        }
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// One dataset repeat: generate, (normalize,) train, evaluate subsets.
/// Returns the mean NDCG@k over the subsets.
pub fn run_synthetic_repeat(
    data_cfg: &SyntheticConfig,
    train_cfg: &TrainConfig,
    proto: &SyntheticProtocolConfig,
    repeat_seed: u64,
) -> Result<f64> {
    let mut data_cfg = data_cfg.clone();
    data_cfg.seed = repeat_seed;
    let data = generate(&data_cfg)?;
    let (train_set, test_set) = if proto.normalize {
        let stats = NormalizationStats::fit(&data.train)?;
        (stats.apply(&data.train)?, stats.apply(&data.test)?)
    } else {
        (data.train, data.test)
    };
    let mut train_cfg = train_cfg.clone();
    train_cfg.seed = derive_seed(repeat_seed, 1);
    let (model, _) = train(&train_set, &train_cfg)?;

    let docs: Vec<&[f64]> = test_set.documents().map(|d| d.features.as_slice()).collect();
    let scores = model.scores(&docs)?;
    let grades: Vec<u32> = test_set.documents().map(|d| d.grade).collect();
    evaluate_subsets(&scores, &grades, proto, &mut substream(repeat_seed, tag::SUBSETS))
}

/// Mean `mu` and standard error `delta_mu` of the metric over dataset repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolPoint {
    pub mu: f64,
    pub delta_mu: f64,
    pub per_repeat: Vec<f64>,
    pub wall_seconds: f64,
}

pub fn run_synthetic_protocol(
    data_cfg: &SyntheticConfig,
    train_cfg: &TrainConfig,
    proto: &SyntheticProtocolConfig,
    master_seed: u64,
) -> Result<ProtocolPoint> {
    proto.validate()?;
    data_cfg.validate()?;
    let start = Instant::now();
    let per_repeat = (0..proto.n_repeats as u64)
        .map(|r| {
            let seed = derive_seed(derive_seed(master_seed, tag::REPEAT), r);
            run_synthetic_repeat(data_cfg, train_cfg, proto, seed)
        })
        .collect::<Result<Vec<f64>>>()?;
    let est = mean_metric(&per_repeat)?;
    Ok(ProtocolPoint {
        mu: est.mean,
        delta_mu: est.stderr,
        per_repeat,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}
