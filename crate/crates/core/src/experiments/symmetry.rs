use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::layout_dataset;
use crate::boundary::{adversarial_overshoot, project_to_boundary, ProjectionResult, ProjectorOptions};
use crate::data::{Dataset, LayoutKind};
use crate::error::{Error, Result};
use crate::field::MarginField;
use crate::nn::{train, MlpNetwork, StopReason, TrainConfig};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryConfig {
    pub kind: LayoutKind,
    /// Non-zero shifts one `square_xor` point to break the symmetry.
    pub perturbation: f64,
    pub trials: usize,
    pub layer_dims: Vec<usize>,
    pub train: TrainConfig,
    pub projector: ProjectorOptions,
    pub kappa: f64,
    /// Two trials share a cluster when every pair of matching projection
    /// directions has at least this cosine similarity.
    pub cluster_cosine: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub kind: LayoutKind,
    pub perturbation: f64,
    pub trials: usize,
    /// Trials whose network did not separate the layout or whose projections
    /// did not converge.
    pub failed_trials: usize,
    /// Cluster index per trial (`None` for failed trials).
    pub assignments: Vec<Option<usize>>,
    /// Sizes in order of first appearance.
    pub cluster_sizes: Vec<usize>,
    pub cluster_count: usize,
    /// Largest cluster over successful trials.
    pub dominant_fraction: f64,
    /// Mean fooling rate of overshoot adversarials between trials of the same
    /// cluster (`None` without such pairs).
    pub within_cluster_transfer: Option<f64>,
    pub cross_cluster_transfer: Option<f64>,
}

struct Trial {
    net: MlpNetwork,
    projections: Vec<ProjectionResult>,
    directions: Vec<Vec<f64>>,
}

fn run_trial(cfg: &SymmetryConfig, data: &Dataset, t: usize) -> Option<Trial> {
    let seed = derive_seed(cfg.seed, t as u64);
    let mut net = MlpNetwork::new(&cfg.layer_dims, derive_seed(seed, 0)).ok()?;
    let mut tc = cfg.train.clone();
    tc.seed = derive_seed(seed, 1);
    tc.batch_size = tc.batch_size.min(data.len());
    let report = train(&mut net, data, &tc).ok()?;
    if report.stopped_reason != StopReason::CriterionMet {
        return None;
    }
    let mut projections = Vec::with_capacity(data.len());
    let mut directions = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let r = project_to_boundary(&net, data.sample(i), data, &cfg.projector).ok()?;
        if !r.converged || r.distance == 0.0 {
            return None;
        }
        directions.push(r.vector.iter().map(|v| v / r.distance).collect());
        projections.push(r);
    }
    Some(Trial {
        net,
        projections,
        directions,
    })
}

fn same_cluster(a: &[Vec<f64>], b: &[Vec<f64>], threshold: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(u, v)| u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() >= threshold)
}

/// Fraction of `from`'s overshoot adversarials that `to` misclassifies.
fn fooling(from: &Trial, to: &Trial, data: &Dataset, kappa: f64) -> f64 {
    let fooled = from
        .projections
        .iter()
        .enumerate()
        .filter(|(i, r)| to.net.predict(&adversarial_overshoot(r, kappa)) != Some(data.label(*i)))
        .count();
    fooled as f64 / data.len() as f64
}

/// Trains `trials` independently seeded networks on a symmetric layout,
/// groups them by the directions of their projection vectors, and compares
/// adversarial transfer within and across groups.
pub fn run_symmetry_experiment(cfg: &SymmetryConfig) -> Result<SymmetryReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if !(cfg.cluster_cosine > -1.0 && cfg.cluster_cosine <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "cluster_cosine must be in (-1, 1], got {}",
            cfg.cluster_cosine
        )));
    }
    cfg.projector.validate()?;
    let data = layout_dataset(cfg.kind, cfg.perturbation)?.data;
    if cfg.layer_dims.first() != Some(&data.dim()) {
        return Err(Error::InvalidConfig(format!(
            "layer_dims must start with {}, got {:?}",
            data.dim(),
            cfg.layer_dims
        )));
    }
    let trials: Vec<Option<Trial>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &data, t))
        .collect();

    let mut reps: Vec<usize> = Vec::new();
    let mut assignments = Vec::with_capacity(trials.len());
    let mut sizes: Vec<usize> = Vec::new();
    for (t, trial) in trials.iter().enumerate() {
        let Some(tr) = trial else {
            assignments.push(None);
            continue;
        };
        let hit = reps.iter().position(|&r| {
            let rep = trials[r].as_ref().expect("representatives succeeded");
            same_cluster(&rep.directions, &tr.directions, cfg.cluster_cosine)
        });
        let c = match hit {
            Some(c) => c,
            None => {
                reps.push(t);
                sizes.push(0);
                reps.len() - 1
            }
        };
        sizes[c] += 1;
        assignments.push(Some(c));
    }

    let ok: Vec<usize> = (0..trials.len()).filter(|&t| trials[t].is_some()).collect();
    let (mut within, mut cross) = ((0.0, 0usize), (0.0, 0usize));
    for &a in &ok {
        for &b in &ok {
            if a == b {
                continue;
            }
            let rate = fooling(
                trials[a].as_ref().expect("ok trial"),
                trials[b].as_ref().expect("ok trial"),
                &data,
                cfg.kappa,
            );
            let slot = if assignments[a] == assignments[b] {
                &mut within
            } else {
                &mut cross
            };
            slot.0 += rate;
            slot.1 += 1;
        }
    }
    let mean = |(s, n): (f64, usize)| if n > 0 { Some(s / n as f64) } else { None };
    let successes = ok.len();
    Ok(SymmetryReport {
        kind: cfg.kind,
        perturbation: cfg.perturbation,
        trials: cfg.trials,
        failed_trials: cfg.trials - successes,
        assignments,
        cluster_count: sizes.len(),
        dominant_fraction: if successes > 0 {
            sizes.iter().copied().max().unwrap_or(0) as f64 / successes as f64
        } else {
            0.0
        },
        cluster_sizes: sizes,
        within_cluster_transfer: mean(within),
        cross_cluster_transfer: mean(cross),
    })
}
