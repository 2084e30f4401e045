//! Synthetic ranking data: every relevance class is a product of
//! independent Gaussians with a random mean and standard deviation per
//! feature, shared between the independently drawn train and test sets.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::RngExt;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::letor::{Dataset, Document};
use crate::net::io::fmt_f64;
use crate::rng::{substream, tag, Rng};

pub const TRAIN_QID: u64 = 1;
pub const TEST_QID: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_classes: usize,
    pub n_features: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub mean_range: (f64, f64),
    pub std_range: (f64, f64),
    /// Standard deviation of the Gaussian added to training labels before
    /// rounding.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_classes: 5,
            n_features: 70,
            train_size: 100_000,
            test_size: 10_000,
            mean_range: (0.0, 100.0),
            std_range: (50.0, 100.0),
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.n_features == 0 {
            return Err(Error::invalid("n_classes and n_features must be positive"));
        }
        if self.train_size < self.n_classes || self.test_size < self.n_classes {
            return Err(Error::invalid("train_size and test_size must be >= n_classes"));
        }
        let (m0, m1) = self.mean_range;
        let (s0, s1) = self.std_range;
        if !(m0.is_finite() && m1.is_finite() && m0 <= m1) {
            return Err(Error::invalid("mean_range must be a finite interval"));
        }
        if !(s0.is_finite() && s1.is_finite() && 0.0 < s0 && s0 <= s1) {
            return Err(Error::invalid("std_range must be a positive finite interval"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma must be >= 0"));
        }
        Ok(())
    }
}

/// Per class and feature Gaussian parameters, indexed `[class][feature]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<Vec<f64>>,
}

impl ClassSpec {
    pub fn new(means: Vec<Vec<f64>>, stds: Vec<Vec<f64>>) -> Result<Self> {
        let n_features = means.first().map_or(0, Vec::len);
        let rect = |m: &Vec<Vec<f64>>| m.iter().all(|r| r.len() == n_features);
        if means.is_empty() || n_features == 0 || means.len() != stds.len() || !rect(&means) || !rect(&stds) {
            return Err(Error::invalid("class spec must be a non-empty classes x features grid"));
        }
        if stds.iter().flatten().any(|&s| !(s.is_finite() && s >= 0.0))
            || means.iter().flatten().any(|m| !m.is_finite())
        {
            return Err(Error::invalid("class spec entries must be finite, stds >= 0"));
        }
        Ok(ClassSpec { means, stds })
    }

    pub fn n_classes(&self) -> usize {
        self.means.len()
    }

    pub fn n_features(&self) -> usize {
        self.means[0].len()
    }

    /// CSV `class,feature,mean,std`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "class,feature,mean,std")?;
        for (c, (ms, ss)) in self.means.iter().zip(&self.stds).enumerate() {
            for (f, (m, s)) in ms.iter().zip(ss).enumerate() {
                writeln!(out, "{c},{},{},{}", f + 1, fmt_f64(*m), fmt_f64(*s))?;
            }
        }
        Ok(())
    }
}

/// Draws one `(mean, std)` per class and feature, uniform over the
/// configured ranges.
pub fn draw_class_specs<R: rand::Rng + ?Sized>(config: &SyntheticConfig, rng: &mut R) -> Result<ClassSpec> {
    config.validate()?;
    let (m0, m1) = config.mean_range;
    let (s0, s1) = config.std_range;
    let mut means = Vec::with_capacity(config.n_classes);
    let mut stds = Vec::with_capacity(config.n_classes);
    for _ in 0..config.n_classes {
        let mut mr = Vec::with_capacity(config.n_features);
        let mut sr = Vec::with_capacity(config.n_features);
        for _ in 0..config.n_features {
            mr.push(rng.random_range(m0..=m1));
            sr.push(rng.random_range(s0..=s1));
        }
        means.push(mr);
        stds.push(sr);
    }
    ClassSpec::new(means, stds)
}

/// `size / n_classes` labels per class, the remainder going to the lowest
/// classes.
pub fn balanced_labels(size: usize, n_classes: usize) -> Vec<u32> {
    let base = size / n_classes;
    let extra = size % n_classes;
    (0..n_classes)
        .flat_map(|c| std::iter::repeat_n(c as u32, base + usize::from(c < extra)))
        .collect()
}

/// `clamp(round(label + N(0, sigma)), 0, n_classes - 1)`, rounding half away
/// from zero. `sigma = 0` returns the labels unchanged.
pub fn add_label_noise<R: rand::Rng + ?Sized>(
    labels: &[u32],
    sigma: f64,
    n_classes: usize,
    rng: &mut R,
) -> Result<Vec<u32>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid("noise sigma must be >= 0"));
    }
    if n_classes == 0 {
        return Err(Error::invalid("n_classes must be positive"));
    }
    if sigma == 0.0 {
        return Ok(labels.to_vec());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let top = (n_classes - 1) as f64;
    Ok(labels
        .iter()
        .map(|&l| {
            let noisy = (f64::from(l) + normal.sample(rng)).round();
            noisy.clamp(0.0, top) as u32
        })
        .collect())
}

/// A generated train/test pair.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    /// Training documents, labelled with the (possibly noisy) labels.
    pub train: Dataset,
    /// Test documents with their true labels.
    pub test: Dataset,
    pub spec: ClassSpec,
    /// Training labels before noise, in document order.
    pub train_true_grades: Vec<u32>,
}

fn sample_documents(spec: &ClassSpec, labels: &[u32], qid: u64, rng: &mut Rng) -> Result<Vec<Document>> {
    let mut docs = Vec::with_capacity(labels.len());
    for &label in labels {
        let c = label as usize;
        let features = spec.means[c]
            .iter()
            .zip(&spec.stds[c])
            .map(|(&m, &s)| {
                Normal::new(m, s)
                    .map(|n| n.sample(rng))
                    .map_err(|e| Error::invalid(e.to_string()))
            })
            .collect::<Result<Vec<f64>>>()?;
        docs.push(Document::new(label, qid, features));
    }
    Ok(docs)
}

fn labelled_set(spec: &ClassSpec, size: usize, qid: u64, rng: &mut Rng) -> Result<Vec<Document>> {
    let mut labels = balanced_labels(size, spec.n_classes());
    labels.shuffle(rng);
    sample_documents(spec, &labels, qid, rng)
}

/// Generates train and test sets from freshly drawn class parameters.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let spec = draw_class_specs(config, &mut substream(config.seed, tag::CLASS_SPECS))?;
    generate_with_spec(config, spec)
}

/// Generates train and test sets from given class parameters; only the
/// sizes, noise and seed of `config` are used.
pub fn generate_with_spec(config: &SyntheticConfig, spec: ClassSpec) -> Result<SyntheticData> {
    if config.train_size < spec.n_classes() || config.test_size < spec.n_classes() {
        return Err(Error::invalid("train_size and test_size must be >= n_classes"));
    }
    let mut train_docs = labelled_set(
        &spec,
        config.train_size,
        TRAIN_QID,
        &mut substream(config.seed, tag::TRAIN_SET),
    )?;
    let test_docs = labelled_set(
        &spec,
        config.test_size,
        TEST_QID,
        &mut substream(config.seed, tag::TEST_SET),
    )?;

    let train_true_grades: Vec<u32> = train_docs.iter().map(|d| d.grade).collect();
    let noisy = add_label_noise(
        &train_true_grades,
        config.noise_sigma,
        spec.n_classes(),
        &mut substream(config.seed, tag::LABEL_NOISE),
    )?;
    for (d, g) in train_docs.iter_mut().zip(noisy) {
        d.grade = g;
    }
    Ok(SyntheticData {
        train: Dataset::from_documents(train_docs)?,
        test: Dataset::from_documents(test_docs)?,
        spec,
        train_true_grades,
    })
}
