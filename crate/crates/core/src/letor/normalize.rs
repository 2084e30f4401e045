use std::io::Write;
use std::path::Path;

use super::Dataset;
use crate::error::{check_dim, Error, Result};
use crate::net::io::fmt_f64;
use crate::net::TokenReader;

/// Target standard deviation of every transformed feature.
pub const TARGET_STD: f64 = 1.0 / 3.0;

const STATS_FORMAT_VERSION: &str = "ranker-normalizer v1";

/// Per-feature mean and (population) standard deviation of a training split.
///
/// Applying the stats maps `x -> (x - mean) / (3 std)`, giving every
/// non-constant feature mean 0 and standard deviation 1/3 on the fit split.
/// Constant features map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl NormalizationStats {
    /// Fits on a training split. Only the training split is ever passed here.
    pub fn fit(train: &Dataset) -> Result<Self> {
        let n = train.num_docs();
        if n == 0 {
            return Err(Error::invalid("cannot fit normalization on an empty split"));
        }
        let dim = train.feature_dim();
        let mut mean = vec![0.0; dim];
        for d in train.documents() {
            for (m, &x) in mean.iter_mut().zip(&d.features) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; dim];
        for d in train.documents() {
            for ((v, &x), &m) in var.iter_mut().zip(&d.features).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n as f64).sqrt()).collect();
        Ok(NormalizationStats { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// True when feature `i` had no spread (up to rounding) on the fit split.
    pub fn is_constant(&self, i: usize) -> bool {
        self.std[i] <= 1e-12 * self.mean[i].abs().max(1.0)
    }

    pub fn constant_features(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.is_constant(i)).collect()
    }

    pub fn transform(&self, features: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), features.len())?;
        for (i, x) in features.iter_mut().enumerate() {
            *x = if self.is_constant(i) {
                0.0
            } else {
                (*x - self.mean[i]) / (3.0 * self.std[i])
            };
        }
        Ok(())
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if !data.is_empty() {
            check_dim(self.dim(), data.feature_dim())?;
        }
        let mut queries = data.clone().into_queries();
        for d in queries.iter_mut().flat_map(|q| q.docs.iter_mut()) {
            self.transform(&mut d.features)?;
        }
        Dataset::new(queries)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        writeln!(buf, "{STATS_FORMAT_VERSION}").unwrap();
        writeln!(buf, "features {}", self.dim()).unwrap();
        for (m, s) in self.mean.iter().zip(&self.std) {
            writeln!(buf, "{} {}", fmt_f64(*m), fmt_f64(*s)).unwrap();
        }
        String::from_utf8(buf).unwrap()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = TokenReader::new(text);
        r.header(STATS_FORMAT_VERSION)?;
        r.expect("features")?;
        let dim: usize = r.parse("feature count")?;
        let values = r.floats(2 * dim, "statistic")?;
        if !r.is_empty() {
            return Err(Error::parse(r.line(), "unexpected trailing data"));
        }
        let (mean, std) = values.chunks_exact(2).map(|c| (c[0], c[1])).unzip();
        Ok(NormalizationStats { mean, std })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NormalizationStats::from_text(&text)
    }
}
