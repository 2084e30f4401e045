//! Dense feedforward network with manual backpropagation.
//!
//! The network is the shared feature part of the ranker: a single parameter
//! set that both documents of a pair are pushed through. Gradients from the
//! two evaluations accumulate into one [`NetGradients`] tape.

mod adam;
pub(crate) mod io;

pub use adam::{AdamConfig, AdamState};
pub use io::{TokenReader, NET_FORMAT_VERSION};

use std::fmt;
use std::str::FromStr;

use rand::RngExt;

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `y = apply(z)`.
    #[inline]
    fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

/// One dense layer: `y = act(W x + b)` with `W` stored row-major (out × in).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    activation: Activation,
}

impl Layer {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        biases: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::invalid("layer dimensions must be positive"));
        }
        check_dim(inputs * outputs, weights.len())?;
        check_dim(outputs, biases.len())?;
        if let Some(bad) = weights.iter().chain(&biases).find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("layer parameter {bad}")));
        }
        Ok(Layer {
            inputs,
            outputs,
            weights,
            biases,
            activation,
        })
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Result<Self> {
        Layer::new(
            inputs,
            outputs,
            vec![0.0; inputs * outputs],
            vec![0.0; outputs],
            activation,
        )
    }

    /// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn glorot<R: rand::Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let limit = glorot_limit(inputs, outputs);
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Layer::new(inputs, outputs, weights, vec![0.0; outputs], activation)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn set_activation(&mut self, activation: Activation) {
        self.activation = activation;
    }

    #[inline]
    pub fn weight(&self, out: usize, input: usize) -> f64 {
        self.weights[out * self.inputs + input]
    }

    fn forward_into(&self, x: &[f64], pre: &mut Vec<f64>, out: &mut Vec<f64>) {
        pre.clear();
        out.clear();
        for (row, &b) in self.weights.chunks_exact(self.inputs).zip(&self.biases) {
            let z = b + dot(row, x);
            pre.push(z);
            out.push(self.activation.apply(z));
        }
    }
}

pub(crate) fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Sequential dot product; the fixed summation order keeps results
/// bit-reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Per-layer inputs, pre-activations and outputs of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// `activations[0]` is the network input, `activations[l + 1]` the
    /// output of layer `l`.
    activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        self.activations.first().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre_activations
    }

    fn shape_matches(&self, net: &FeatureNet) -> bool {
        self.activations.len() == net.layers.len() + 1
            && self.activations[0].len() == net.input_dim()
            && self
                .activations
                .iter()
                .skip(1)
                .zip(&net.layers)
                .all(|(a, l)| a.len() == l.outputs)
    }
}

/// Gradient accumulators shaped like a [`FeatureNet`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradients {
    layers: Vec<LayerGradients>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl NetGradients {
    pub fn zeros_like(net: &FeatureNet) -> Self {
        NetGradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn reset(&mut self) {
        for l in &mut self.layers {
            l.weights.fill(0.0);
            l.biases.fill(0.0);
        }
    }

    pub fn layers(&self) -> &[LayerGradients] {
        &self.layers
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.blocks_mut() {
            v.iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Gradient blocks in the same order as [`FeatureNet::param_blocks_mut`].
    pub fn blocks(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
            .collect()
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()])
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// The shared feature network `f: R^d -> R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNet {
    layers: Vec<Layer>,
}

impl FeatureNet {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a feature net needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].outputs,
                    actual: pair[1].inputs,
                });
            }
        }
        Ok(FeatureNet { layers })
    }

    /// Randomly initialized net with the given layer widths. Hidden layers use
    /// `hidden`, the last layer uses `output`.
    pub fn init<R: rand::Rng + ?Sized>(
        input_dim: usize,
        widths: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::invalid("layer width list is empty"));
        }
        let mut layers = Vec::with_capacity(widths.len());
        let mut fan_in = input_dim;
        for (i, &width) in widths.iter().enumerate() {
            let act = if i + 1 == widths.len() { output } else { hidden };
            layers.push(Layer::glorot(fan_in, width, act, rng)?);
            fan_in = width;
        }
        FeatureNet::new(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameter blocks (weights then biases, layer by layer).
    pub fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()])
            .collect()
    }

    pub fn param_blocks(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        check_dim(self.input_dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    /// Evaluates `f(x)` and keeps everything the backward pass needs.
    pub fn forward(&self, x: &[f64]) -> Result<ForwardCache> {
        let mut cache = ForwardCache::default();
        self.forward_into(x, &mut cache)?;
        Ok(cache)
    }

    /// Like [`forward`](Self::forward) but reuses the buffers of `cache`.
    pub fn forward_into(&self, x: &[f64], cache: &mut ForwardCache) -> Result<()> {
        self.check_input(x)?;
        let n = self.layers.len();
        cache.activations.resize_with(n + 1, Vec::new);
        cache.pre_activations.resize_with(n, Vec::new);
        cache.activations[0].clear();
        cache.activations[0].extend_from_slice(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let (done, rest) = cache.activations.split_at_mut(l + 1);
            layer.forward_into(&done[l], &mut cache.pre_activations[l], &mut rest[0]);
        }
        Ok(())
    }

    /// `f(x)` without a cache.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let (mut pre, mut next) = (Vec::new(), Vec::new());
        for layer in &self.layers {
            layer.forward_into(&cur, &mut pre, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Backpropagates `upstream = dL/df(x)` through the pass recorded in
    /// `cache`, adding parameter gradients into `tape`. Returns `dL/dx`.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64], tape: &mut NetGradients) -> Result<Vec<f64>> {
        if !cache.shape_matches(self) {
            return Err(Error::invalid("forward cache does not match this network"));
        }
        check_dim(self.output_dim(), upstream.len())?;
        check_dim(self.layers.len(), tape.layers.len())?;

        let last = self.layers.len() - 1;
        let mut delta: Vec<f64> = upstream
            .iter()
            .zip(&cache.activations[last + 1])
            .map(|(g, &y)| g * self.layers[last].activation.derivative_at_output(y))
            .collect();

        for l in (0..=last).rev() {
            let layer = &self.layers[l];
            let input = &cache.activations[l];
            let grads = &mut tape.layers[l];
            check_dim(layer.weights.len(), grads.weights.len())?;
            for (o, &d) in delta.iter().enumerate() {
                grads.biases[o] += d;
                if d != 0.0 {
                    let row = &mut grads.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, &a) in row.iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
            }
            // dL/d(input of this layer)
            let mut back = vec![0.0; layer.inputs];
            for (row, &d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                if d != 0.0 {
                    for (b, &w) in back.iter_mut().zip(row) {
                        *b += d * w;
                    }
                }
            }
            if l > 0 {
                let prev_act = self.layers[l - 1].activation;
                for (b, &y) in back.iter_mut().zip(&cache.activations[l]) {
                    *b *= prev_act.derivative_at_output(y);
                }
            }
            delta = back;
        }
        Ok(delta)
    }
}
