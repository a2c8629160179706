use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{margin_is_correct, softmax2, softplus, MlpNetwork};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdMomentum,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub momentum: f64,
    pub adam_betas: (f64, f64),
    pub adam_epsilon: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Required mean true-class probability once every sample is correct.
    pub accuracy_target: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-4,
            momentum: 0.9,
            adam_betas: (0.9, 0.999),
            adam_epsilon: 1e-8,
            max_epochs: 10_000,
            batch_size: 32,
            accuracy_target: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dataset_len: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0,1), got {}", self.momentum));
        }
        let (b1, b2) = self.adam_betas;
        if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) {
            return bad(format!("adam betas must be in [0,1), got ({b1}, {b2})"));
        }
        if !(self.adam_epsilon > 0.0) {
            return bad(format!("adam_epsilon must be > 0, got {}", self.adam_epsilon));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        if self.batch_size == 0 || self.batch_size > dataset_len {
            return bad(format!(
                "batch_size must be in 1..={dataset_len}, got {}",
                self.batch_size
            ));
        }
        if !(self.accuracy_target > 0.0 && self.accuracy_target <= 1.0) {
            return bad(format!(
                "accuracy_target must be in (0,1], got {}",
                self.accuracy_target
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CriterionMet,
    EpochCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub final_train_accuracy: f64,
    pub final_loss: f64,
    /// Mean softmax probability of the true class at the end.
    pub final_confidence: f64,
    pub stopped_reason: StopReason,
}

struct Evaluation {
    accuracy: f64,
    all_correct: bool,
    loss: f64,
    confidence: f64,
}

fn evaluate(net: &MlpNetwork, data: &Dataset) -> Result<Evaluation> {
    let logits = net.forward_batch(data.features())?;
    let mut correct = 0usize;
    let mut loss = 0.0;
    let mut confidence = 0.0;
    for (row, &label) in logits.rows().into_iter().zip(data.labels()) {
        let pair = [row[0], row[1]];
        if margin_is_correct(pair[1] - pair[0], label) {
            correct += 1;
        }
        let own = pair[label as usize];
        let other = pair[1 - label as usize];
        loss += softplus(other - own);
        confidence += softmax2(pair)[label as usize];
    }
    let n = data.len() as f64;
    Ok(Evaluation {
        accuracy: correct as f64 / n,
        all_correct: correct == data.len(),
        loss: loss / n,
        confidence: confidence / n,
    })
}

/// Per-parameter optimizer state, laid out like the network's layers.
struct Moments {
    w: Vec<Array2<f64>>,
    b: Vec<Array1<f64>>,
}

impl Moments {
    fn zeros_like(net: &MlpNetwork) -> Self {
        Self {
            w: net.layers().iter().map(|l| Array2::zeros(l.weights.dim())).collect(),
            b: net.layers().iter().map(|l| Array1::zeros(l.biases.len())).collect(),
        }
    }
}

enum Optimizer {
    Sgd {
        lr: f64,
        momentum: f64,
        velocity: Moments,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        step: i32,
        m: Moments,
        v: Moments,
    },
}

impl Optimizer {
    fn new(cfg: &TrainConfig, net: &MlpNetwork) -> Self {
        match cfg.optimizer {
            OptimizerKind::SgdMomentum => Optimizer::Sgd {
                lr: cfg.learning_rate,
                momentum: cfg.momentum,
                velocity: Moments::zeros_like(net),
            },
            OptimizerKind::Adam => Optimizer::Adam {
                lr: cfg.learning_rate,
                beta1: cfg.adam_betas.0,
                beta2: cfg.adam_betas.1,
                eps: cfg.adam_epsilon,
                step: 0,
                m: Moments::zeros_like(net),
                v: Moments::zeros_like(net),
            },
        }
    }

    fn apply(&mut self, net: &mut MlpNetwork, grads: &Moments) {
        match self {
            Optimizer::Sgd {
                lr,
                momentum,
                velocity,
            } => {
                let (lr, mu) = (*lr, *momentum);
                for (k, layer) in net.layers_mut().iter_mut().enumerate() {
                    velocity.w[k].zip_mut_with(&grads.w[k], |v, &g| *v = mu * *v + g);
                    velocity.b[k].zip_mut_with(&grads.b[k], |v, &g| *v = mu * *v + g);
                    layer.weights.scaled_add(-lr, &velocity.w[k]);
                    layer.biases.scaled_add(-lr, &velocity.b[k]);
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                step,
                m,
                v,
            } => {
                *step += 1;
                let (b1, b2, eps) = (*beta1, *beta2, *eps);
                let c1 = 1.0 - b1.powi(*step);
                let c2 = 1.0 - b2.powi(*step);
                let lr = *lr;
                let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                };
                for (k, layer) in net.layers_mut().iter_mut().enumerate() {
                    ndarray::Zip::from(&mut layer.weights)
                        .and(&mut m.w[k])
                        .and(&mut v.w[k])
                        .and(&grads.w[k])
                        .for_each(|p, m, v, &g| update(p, m, v, g));
                    ndarray::Zip::from(&mut layer.biases)
                        .and(&mut m.b[k])
                        .and(&mut v.b[k])
                        .and(&grads.b[k])
                        .for_each(|p, m, v, &g| update(p, m, v, g));
                }
            }
        }
    }
}

/// Mean NLL gradient over one minibatch.
fn batch_gradients(net: &MlpNetwork, xs: Array2<f64>, labels: &[u8]) -> (Moments, f64) {
    let layers = net.layers();
    let last = layers.len() - 1;
    // acts[k] is the input to layer k.
    let mut acts = Vec::with_capacity(layers.len());
    acts.push(xs);
    let mut logits = None;
    for (k, layer) in layers.iter().enumerate() {
        let mut z = acts[k].dot(&layer.weights.t());
        z += &layer.biases.view().insert_axis(Axis(0));
        if k < last {
            z.mapv_inplace(|v| v.max(0.0));
            acts.push(z);
        } else {
            logits = Some(z);
        }
    }
    let logits = logits.expect("network has layers");
    let n = labels.len() as f64;
    let mut delta = Array2::zeros((labels.len(), 2));
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let pair = [logits[[i, 0]], logits[[i, 1]]];
        let p = softmax2(pair);
        let own = label as usize;
        loss += softplus(pair[1 - own] - pair[own]);
        delta[[i, 0]] = p[0] / n;
        delta[[i, 1]] = p[1] / n;
        delta[[i, own]] -= 1.0 / n;
    }
    let mut gw = vec![Array2::zeros((0, 0)); layers.len()];
    let mut gb = vec![Array1::zeros(0); layers.len()];
    for k in (0..layers.len()).rev() {
        gw[k] = delta.t().dot(&acts[k]);
        gb[k] = delta.sum_axis(Axis(0));
        if k > 0 {
            let mut prev = delta.dot(&layers[k].weights);
            // acts[k] is relu(z_{k-1}); its positive entries mark active units.
            prev.zip_mut_with(&acts[k], |d, &a| {
                if a <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = prev;
        }
    }
    (Moments { w: gw, b: gb }, loss / n)
}

/// Trains `net` in place with minibatch NLL.
///
/// Stops at the first epoch end where every sample is on its correct side
/// and the mean true-class probability reaches `cfg.accuracy_target`, or at
/// `cfg.max_epochs`. A non-finite loss or parameter aborts with
/// [`Error::Divergence`].
pub fn train(net: &mut MlpNetwork, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    data.ensure_binary()?;
    if data.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: data.dim(),
        });
    }
    cfg.validate(data.len())?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut optimizer = Optimizer::new(cfg, net);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let features = data.features();
    let mut labels_buf = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let xs = features.select(Axis(0), chunk);
            labels_buf.clear();
            labels_buf.extend(chunk.iter().map(|&i| data.label(i)));
            let (grads, loss) = batch_gradients(net, xs, &labels_buf);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            optimizer.apply(net, &grads);
        }
        if !net.params_finite() {
            return Err(Error::Divergence { epoch });
        }
        let eval = evaluate(net, data)?;
        if !eval.loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let met = eval.all_correct && eval.confidence >= cfg.accuracy_target;
        if met || epoch == cfg.max_epochs {
            return Ok(TrainReport {
                epochs_run: epoch,
                final_train_accuracy: eval.accuracy,
                final_loss: eval.loss,
                final_confidence: eval.confidence,
                stopped_reason: if met {
                    StopReason::CriterionMet
                } else {
                    StopReason::EpochCap
                },
            });
        }
    }
    unreachable!("max_epochs >= 1 is validated")
}
