//! Dense feed-forward binary classifier with hand-written backpropagation.
//!
//! The network maps `R^n` to two logits. Its scalar margin
//! `logit[1] - logit[0]` is the classifier: positive means label 1, negative
//! label 0, and the zero set is the decision boundary.

mod checkpoint;
mod train;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::field::MarginField;
use crate::rng::rng_from_seed;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use train::{train, OptimizerKind, StopReason, TrainConfig, TrainReport};

/// One affine layer. `weights` has shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// Rectifier on every hidden layer, identity on the 2-logit output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    layers: Vec<DenseLayer>,
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "a network needs at least input and output dimensions, got {layer_dims:?}"
        )));
    }
    if layer_dims.contains(&0) {
        return Err(Error::InvalidConfig(format!(
            "layer dimensions must be positive, got {layer_dims:?}"
        )));
    }
    if *layer_dims.last().unwrap() != 2 {
        return Err(Error::InvalidConfig(format!(
            "output dimension must be 2, got {layer_dims:?}"
        )));
    }
    Ok(())
}

impl MlpNetwork {
    /// Random network: weights `N(0, 2 / fan_in)`, zero biases.
    pub fn new(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = rng_from_seed(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let scale = (2.0 / fan_in as f64).sqrt();
                let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * scale
                });
                DenseLayer {
                    weights,
                    biases: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidConfig("network without layers".into()))?;
        let mut dims = vec![first.in_dim()];
        for (k, layer) in layers.iter().enumerate() {
            if layer.in_dim() != *dims.last().unwrap() {
                return Err(Error::InvalidConfig(format!(
                    "layer {k} expects {} inputs but previous layer yields {}",
                    layer.in_dim(),
                    dims.last().unwrap()
                )));
            }
            if layer.biases.len() != layer.out_dim() {
                return Err(Error::InvalidConfig(format!(
                    "layer {k} has {} biases for {} outputs",
                    layer.biases.len(),
                    layer.out_dim()
                )));
            }
            dims.push(layer.out_dim());
        }
        validate_dims(&dims)?;
        let net = Self { layers };
        if !net.params_finite() {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(DenseLayer::out_dim))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn params_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.biases.iter()).all(|v| v.is_finite()))
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        Ok(())
    }

    /// Returns pre-activations of every layer; the last entry is the logits.
    fn trace(&self, x: &[f64]) -> Vec<Array1<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = Array1::from(x.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let z = layer.weights.dot(&act) + &layer.biases;
            if k < last {
                act = z.mapv(|v| v.max(0.0));
            }
            pre.push(z);
        }
        pre
    }

    fn logits_unchecked(&self, x: &[f64]) -> [f64; 2] {
        let z = self.trace(x).pop().expect("network has layers");
        [z[0], z[1]]
    }

    pub fn forward(&self, x: &[f64]) -> Result<[f64; 2]> {
        self.check_input(x)?;
        Ok(self.logits_unchecked(x))
    }

    /// `logit[1] - logit[0]`.
    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        let [a, b] = self.forward(x)?;
        Ok(b - a)
    }

    /// Gradient of the margin with respect to the input.
    pub fn grad_input(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.margin_and_grad_unchecked(x).1)
    }

    fn margin_and_grad_unchecked(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let pre = self.trace(x);
        let logits = pre.last().expect("network has layers");
        let margin = logits[1] - logits[0];
        let mut delta = Array1::from(vec![-1.0, 1.0]);
        for k in (0..self.layers.len()).rev() {
            let mut g = self.layers[k].weights.t().dot(&delta);
            if k > 0 {
                g.zip_mut_with(&pre[k - 1], |gi, &z| {
                    if z <= 0.0 {
                        *gi = 0.0;
                    }
                });
            }
            delta = g;
        }
        (margin, delta.to_vec())
    }

    pub fn margin_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        Ok(self.margin_and_grad_unchecked(x))
    }

    /// Smallest absolute hidden pre-activation at `x`; small values mean `x`
    /// sits near a rectifier kink where the margin is not differentiable.
    pub fn kink_distance(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let pre = self.trace(x);
        Ok(pre[..pre.len() - 1]
            .iter()
            .flat_map(|z| z.iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min))
    }

    /// Which hidden units are active (`pre-activation > 0`) at `x`.
    pub fn activation_pattern(&self, x: &[f64]) -> Result<Vec<bool>> {
        self.check_input(x)?;
        let pre = self.trace(x);
        Ok(pre[..pre.len() - 1]
            .iter()
            .flat_map(|z| z.iter().map(|v| *v > 0.0))
            .collect())
    }

    /// Logits for every row of `xs`, shape `(rows, 2)`.
    pub fn forward_batch(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if xs.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: xs.ncols(),
            });
        }
        let mut act = xs.to_owned();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = act.dot(&layer.weights.t());
            z += &layer.biases.view().insert_axis(Axis(0));
            if k < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            act = z;
        }
        Ok(act)
    }

    pub fn margins(&self, data: &Dataset) -> Result<Vec<f64>> {
        let logits = self.forward_batch(data.features())?;
        Ok(logits.rows().into_iter().map(|r| r[1] - r[0]).collect())
    }

    /// Fraction of samples whose margin sign matches the label. A zero
    /// margin counts as wrong.
    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(accuracy_from_margins(&self.margins(data)?, data.labels()))
    }
}

impl MarginField for MlpNetwork {
    fn input_dim(&self) -> usize {
        MlpNetwork::input_dim(self)
    }

    fn margin_at(&self, x: &[f64]) -> f64 {
        let [a, b] = self.logits_unchecked(x);
        b - a
    }

    fn margin_grad_at(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self.margin_and_grad_unchecked(x)
    }
}

pub fn margin_is_correct(margin: f64, label: u8) -> bool {
    (label == 1 && margin > 0.0) || (label == 0 && margin < 0.0)
}

pub fn accuracy_from_margins(margins: &[f64], labels: &[u8]) -> f64 {
    let correct = margins
        .iter()
        .zip(labels)
        .filter(|(&m, &l)| margin_is_correct(m, l))
        .count();
    correct as f64 / margins.len() as f64
}

pub fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// `-ln softmax(logits)[label]`, evaluated as a softplus of the logit gap.
pub fn loss_nll(logits: [f64; 2], label: u8) -> Result<f64> {
    if !(logits[0].is_finite() && logits[1].is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    if label > 1 {
        return Err(Error::InvalidDataset(format!("label {label} is not binary")));
    }
    let own = logits[label as usize];
    let other = logits[1 - label as usize];
    Ok(softplus(other - own))
}

pub(crate) fn softplus(d: f64) -> f64 {
    if d > 0.0 {
        d + (-d).exp().ln_1p()
    } else {
        d.exp().ln_1p()
    }
}
