//! The pairwise ranker: one shared feature net feeding a bias-free output
//! neuron on the difference of the two feature vectors.
//!
//! Because the head is linear before its odd activation,
//! `r(x, y) = tau(w . f(x) - w . f(y)) = tau(g(x) - g(y))`. Everything here
//! computes `r` through the scalar score `g`, evaluated once per document,
//! so reflexivity and antisymmetry hold bit-exactly in floating point and
//! sorting by `g` realizes the pairwise order.

use std::cmp::Ordering;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::net::io::write_row;
use crate::net::{dot, glorot_limit, Activation, FeatureNet, ForwardCache, TokenReader};

pub const MODEL_FORMAT_VERSION: &str = "ranker-model v1";

/// Output activation of the comparison neuron. Both variants are odd and
/// sign-conserving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Tau {
    #[default]
    Identity,
    /// `tanh(x / 2)`, which turns the ranker into RankNet's comparator.
    TanhHalf,
}

impl Tau {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Tau::Identity => x,
            // evaluated on |x| so that oddness does not depend on libm
            Tau::TanhHalf => (0.5 * x.abs()).tanh().copysign(x),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Tau::Identity => 1.0,
            Tau::TanhHalf => {
                let t = (0.5 * x).tanh();
                0.5 * (1.0 - t * t)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tau::Identity => "identity",
            Tau::TanhHalf => "tanh_half",
        }
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Tau {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "id" => Ok(Tau::Identity),
            "tanh_half" => Ok(Tau::TanhHalf),
            other => Err(Error::invalid(format!("unknown output activation `{other}`"))),
        }
    }
}

/// The single output neuron. It has no bias field at all.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputHead {
    w: Vec<f64>,
    tau: Tau,
}

impl OutputHead {
    pub fn new(w: Vec<f64>, tau: Tau) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::invalid("output head needs at least one weight"));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("output head weight".into()));
        }
        Ok(OutputHead { w, tau })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub fn tau(&self) -> Tau {
        self.tau
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectRanker {
    net: FeatureNet,
    head: OutputHead,
}

impl DirectRanker {
    pub fn new(net: FeatureNet, head: OutputHead) -> Result<Self> {
        check_dim(net.output_dim(), head.w.len())?;
        Ok(DirectRanker { net, head })
    }

    /// Random model: Glorot-initialized net and head.
    pub fn init<R: rand::Rng + ?Sized>(
        input_dim: usize,
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        tau: Tau,
        rng: &mut R,
    ) -> Result<Self> {
        use rand::RngExt;
        let net = FeatureNet::init(input_dim, widths, hidden, output, rng)?;
        let n = net.output_dim();
        let limit = glorot_limit(n, 1);
        let w = (0..n).map(|_| rng.random_range(-limit..=limit)).collect();
        DirectRanker::new(net, OutputHead::new(w, tau)?)
    }

    pub fn feature_net(&self) -> &FeatureNet {
        &self.net
    }

    pub fn head(&self) -> &OutputHead {
        &self.head
    }

    pub fn tau(&self) -> Tau {
        self.head.tau
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Same parameters, different output activation.
    pub fn with_tau(&self, tau: Tau) -> Self {
        let mut m = self.clone();
        m.head.tau = tau;
        m
    }

    /// All trainable blocks: the net's blocks followed by the head weights.
    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut blocks = self.net.param_blocks_mut();
        blocks.push(&mut self.head.w);
        blocks
    }

    pub fn param_blocks(&self) -> Vec<&[f64]> {
        let mut blocks = self.net.param_blocks();
        blocks.push(&self.head.w);
        blocks
    }

    /// `g(x) = w . f(x)`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let f = self.net.eval(x)?;
        Ok(dot(&self.head.w, &f))
    }

    /// `g` from an existing forward pass.
    pub fn score_from_cache(&self, cache: &ForwardCache) -> f64 {
        dot(&self.head.w, cache.output())
    }

    /// `r(x, y) = tau(g(x) - g(y))`; `x` ranks at least as high as `y` iff
    /// the result is `>= 0`.
    pub fn rank_pair(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let gx = self.score(x)?;
        let gy = self.score(y)?;
        Ok(self.head.tau.apply(gx - gy))
    }

    pub fn scores<D: AsRef<[f64]>>(&self, docs: &[D]) -> Result<Vec<f64>> {
        docs.iter().map(|d| self.score(d.as_ref())).collect()
    }

    /// Indices of `docs` from most to least relevant.
    pub fn sort_documents<D: AsRef<[f64]>>(&self, docs: &[D]) -> Result<Vec<usize>> {
        if docs.is_empty() {
            return Err(Error::invalid("cannot sort an empty document list"));
        }
        Ok(order_by_score(&self.scores(docs)?))
    }

    pub fn write<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{MODEL_FORMAT_VERSION}")?;
        self.net.write_records(out)?;
        writeln!(out, "head {} {}", self.head.w.len(), self.head.tau)?;
        write_row(out, &self.head.w)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut reader = TokenReader::new(text);
        reader.header(MODEL_FORMAT_VERSION)?;
        let net = FeatureNet::read_records(&mut reader)?;
        let line = reader.line();
        reader.expect("head")?;
        let n: usize = reader.parse("head size")?;
        let tau: Tau = reader
            .next_token("head activation")?
            .parse()
            .map_err(|e: Error| Error::parse(line, e.to_string()))?;
        let w = reader.floats(n, "head weight")?;
        if let Some(tok) = reader.peek() {
            return Err(Error::parse(
                reader.line(),
                format!("unexpected trailing token `{tok}`"),
            ));
        }
        DirectRanker::new(net, OutputHead::new(w, tau)?).map_err(|e| Error::parse(line, e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DirectRanker::from_text(&text)
    }
}

/// Descending by score, ties by ascending index.
pub fn order_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Layer;
    use crate::rng::rng_from_seed;

    fn identity_model(dim: usize, w: Vec<f64>, tau: Tau) -> DirectRanker {
        let mut weights = vec![0.0; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        let layer = Layer::new(dim, dim, weights, vec![0.0; dim], Activation::Identity).unwrap();
        DirectRanker::new(FeatureNet::new(vec![layer]).unwrap(), OutputHead::new(w, tau).unwrap()).unwrap()
    }

    #[test]
    fn linear_projection_score() {
        let m = identity_model(2, vec![1.0, 0.0], Tau::Identity);
        assert_eq!(m.score(&[7.0, 99.0]).unwrap(), 7.0);
        let z = identity_model(2, vec![0.0, 0.0], Tau::Identity);
        assert_eq!(z.score(&[7.0, 99.0]).unwrap(), 0.0);
    }

    #[test]
    fn score_composes_forward_and_dot() {
        let mut rng = rng_from_seed(9);
        let m = DirectRanker::init(4, &[6, 3], Activation::Tanh, Activation::Tanh, Tau::Identity, &mut rng).unwrap();
        let x = [0.1, -0.4, 2.0, 0.0];
        let f = m.feature_net().forward(&x).unwrap();
        let mut expect = 0.0;
        for (a, b) in m.head().weights().iter().zip(f.output()) {
            expect += a * b;
        }
        assert_eq!(m.score(&x).unwrap().to_bits(), expect.to_bits());
    }

    #[test]
    fn forced_pair_arithmetic() {
        let m = identity_model(1, vec![1.0], Tau::Identity);
        assert_eq!(m.rank_pair(&[5.0], &[3.0]).unwrap(), 2.0);
        assert_eq!(m.rank_pair(&[3.0], &[5.0]).unwrap(), -2.0);
        assert_eq!(m.rank_pair(&[4.0], &[4.0]).unwrap(), 0.0);
    }

    #[test]
    fn sort_examples() {
        let m = identity_model(1, vec![1.0], Tau::Identity);
        assert_eq!(m.sort_documents(&[[1.0], [3.0], [2.0]]).unwrap(), vec![1, 2, 0]);
        assert_eq!(m.sort_documents(&[[2.0], [2.0], [2.0]]).unwrap(), vec![0, 1, 2]);
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(m.sort_documents(&empty).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let m = identity_model(2, vec![1.0, 1.0], Tau::Identity);
        assert!(m.score(&[1.0]).is_err());
        assert!(m.rank_pair(&[1.0, 2.0], &[1.0]).is_err());
        let net = FeatureNet::new(vec![Layer::zeros(2, 3, Activation::Tanh).unwrap()]).unwrap();
        assert!(DirectRanker::new(net, OutputHead::new(vec![1.0], Tau::Identity).unwrap()).is_err());
    }

    #[test]
    fn tau_is_odd_and_sign_conserving() {
        for &x in &[0.0, 1e-300, 0.3, 2.0, 40.0, 1e10] {
            for tau in [Tau::Identity, Tau::TanhHalf] {
                assert_eq!(tau.apply(-x), -tau.apply(x));
                assert!(tau.apply(x) >= 0.0);
                if x > 0.0 {
                    assert!(tau.apply(x) > 0.0, "{tau} at {x}");
                }
            }
        }
        assert_eq!(Tau::TanhHalf.apply(0.0), 0.0);
    }

    #[test]
    fn tanh_half_derivative() {
        let h = 1e-6;
        for &x in &[-3.0, -0.2, 0.0, 1.1, 5.0] {
            let fd = (Tau::TanhHalf.apply(x + h) - Tau::TanhHalf.apply(x - h)) / (2.0 * h);
            assert!((fd - Tau::TanhHalf.derivative(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn model_text_round_trip() {
        let mut rng = rng_from_seed(21);
        let m = DirectRanker::init(5, &[4, 2], Activation::Tanh, Activation::Tanh, Tau::TanhHalf, &mut rng).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("ranker-model v1\n"));
        assert!(text.contains("\nhead 2 tanh_half\n"));
        assert_eq!(DirectRanker::from_text(&text).unwrap(), m);
        assert_eq!(DirectRanker::from_text(&text).unwrap().to_text(), text);
    }

    #[test]
    fn model_loader_rejects_unknown_version_and_missing_head() {
        let mut rng = rng_from_seed(2);
        let m = DirectRanker::init(2, &[2], Activation::Tanh, Activation::Tanh, Tau::Identity, &mut rng).unwrap();
        let text = m.to_text().replace("ranker-model v1", "ranker-model v2");
        assert!(matches!(
            DirectRanker::from_text(&text),
            Err(Error::UnsupportedVersion(_))
        ));
        let net_only = m.feature_net().to_text().replace("ranker-net", "ranker-model");
        assert!(DirectRanker::from_text(&net_only).is_err());
    }
}
