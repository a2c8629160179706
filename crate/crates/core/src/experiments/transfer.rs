use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::DatasetSpec;
use crate::boundary::{adversarial_overshoot, project_to_boundary, ProjectorOptions};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::field::MarginField;
use crate::nn::{train, MlpNetwork, TrainConfig};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    /// Same training data, different architectures.
    CrossModel,
    /// Same architecture, disjoint halves of the training data.
    CrossTrainingSet,
}

impl std::str::FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross_model" => Ok(Self::CrossModel),
            "cross_training_set" => Ok(Self::CrossTrainingSet),
            other => Err(Error::InvalidConfig(format!(
                "unknown transfer mode '{other}' (expected cross_model or cross_training_set)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub dataset: DatasetSpec,
    pub mode: TransferMode,
    pub source_dims: Vec<usize>,
    /// Ignored in cross-training-set mode, where both nets share `source_dims`.
    pub target_dims: Vec<usize>,
    pub train: TrainConfig,
    pub projector: ProjectorOptions,
    pub kappa: f64,
    /// Held-out samples the adversarials are crafted from.
    pub test_size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub mode: TransferMode,
    pub kappa: f64,
    pub fooling_rate_transfer: f64,
    pub fooling_rate_source: f64,
    pub fooling_rate_random_baseline: f64,
    /// Held-out samples both nets classify correctly and whose projection
    /// converged; the rates are fractions of this count.
    pub evaluated: usize,
    pub source_clean_accuracy: f64,
    pub target_clean_accuracy: f64,
    /// False when the target's clean accuracy is below 0.9.
    pub valid: bool,
}

/// Fooling rates of overshoot adversarials crafted on `source` (projecting
/// with `source_train` as the segment reference) against `source`, `target`
/// and, for the baseline, `target` under random directions of equal norm.
pub fn transfer_rates(
    source: &MlpNetwork,
    target: &MlpNetwork,
    source_train: &Dataset,
    eval: &Dataset,
    projector: &ProjectorOptions,
    kappa: f64,
    seed: u64,
) -> Result<(f64, f64, f64, usize)> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidConfig(format!("kappa must be >= 0, got {kappa}")));
    }
    let mut rng = rng_from_seed(seed);
    let (mut n, mut fs, mut ft, mut fr) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..eval.len() {
        let x = eval.sample(i);
        let label = eval.label(i);
        // Random direction drawn for every sample so the stream does not
        // depend on which samples are skipped.
        let dir: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        if source.predict(x) != Some(label) || target.predict(x) != Some(label) {
            continue;
        }
        let r = project_to_boundary(source, x, source_train, projector)?;
        if !r.converged {
            continue;
        }
        n += 1;
        let adv = adversarial_overshoot(&r, kappa);
        fs += usize::from(source.predict(&adv) != Some(label));
        ft += usize::from(target.predict(&adv) != Some(label));
        let dn = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let len = (1.0 + kappa) * r.distance;
        let rnd: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + len * d / dn).collect();
        fr += usize::from(target.predict(&rnd) != Some(label));
    }
    if n == 0 {
        return Ok((0.0, 0.0, 0.0, 0));
    }
    let rate = |c: usize| c as f64 / n as f64;
    Ok((rate(fs), rate(ft), rate(fr), n))
}

fn fit(dims: &[usize], data: &Dataset, base: &TrainConfig, seed: u64) -> Result<MlpNetwork> {
    let mut net = MlpNetwork::new(dims, derive_seed(seed, 0))?;
    let mut cfg = base.clone();
    cfg.seed = derive_seed(seed, 1);
    cfg.batch_size = cfg.batch_size.min(data.len());
    train(&mut net, data, &cfg)?;
    Ok(net)
}

/// Trains a source and a target network per `cfg.mode` and measures how
/// often adversarials crafted on the source fool the target.
pub fn run_transfer(cfg: &TransferConfig) -> Result<TransferReport> {
    cfg.projector.validate()?;
    if cfg.test_size == 0 {
        return Err(Error::InvalidConfig("transfer needs test_size > 0".into()));
    }
    let (data, eval) = cfg.dataset.materialize(cfg.test_size)?;
    let eval = eval.ok_or(Error::EmptyDataset)?;
    data.ensure_binary()?;
    let (src_data, tgt_data, tgt_dims) = match cfg.mode {
        TransferMode::CrossModel => (data.clone(), data, cfg.target_dims.clone()),
        TransferMode::CrossTrainingSet => {
            let (a, rest) = data.split_balanced(balanced_half(&data)?, derive_seed(cfg.seed, 10))?;
            let b = data.subset(&rest)?;
            (a, b, cfg.source_dims.clone())
        }
    };
    let (source, target) = rayon::join(
        || fit(&cfg.source_dims, &src_data, &cfg.train, derive_seed(cfg.seed, 1)),
        || fit(&tgt_dims, &tgt_data, &cfg.train, derive_seed(cfg.seed, 2)),
    );
    let (source, target) = (source?, target?);
    let source_clean_accuracy = source.accuracy(&eval)?;
    let target_clean_accuracy = target.accuracy(&eval)?;
    let (fs, ft, fr, n) = transfer_rates(
        &source,
        &target,
        &src_data,
        &eval,
        &cfg.projector,
        cfg.kappa,
        derive_seed(cfg.seed, 3),
    )?;
    Ok(TransferReport {
        mode: cfg.mode,
        kappa: cfg.kappa,
        fooling_rate_transfer: ft,
        fooling_rate_source: fs,
        fooling_rate_random_baseline: fr,
        evaluated: n,
        source_clean_accuracy,
        target_clean_accuracy,
        valid: target_clean_accuracy >= 0.9,
    })
}

/// Largest even sample count that leaves an equally balanced remainder.
fn balanced_half(data: &Dataset) -> Result<usize> {
    let per = data.count_label(0).min(data.count_label(1)) / 2;
    if per == 0 {
        return Err(Error::InsufficientSamples {
            class: if data.count_label(0) < 2 { 0 } else { 1 },
            needed: 2,
            available: data.count_label(0).min(data.count_label(1)),
        });
    }
    Ok(2 * per)
}
