use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::boundary::ProjectorOptions;
use crate::data::{gen_gaussian_blobs, gen_symmetric_layout, load_idx, perturbed_square_xor, Dataset, LayoutKind};
use crate::error::{Error, Result};
use crate::nn::TrainConfig;
use crate::rng::derive_seed;

/// Where a working set comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// Two gaussian clusters. Test data, when requested, is drawn from the
    /// same clusters with a derived seed.
    Blobs {
        per_class: usize,
        center0: Vec<f64>,
        center1: Vec<f64>,
        sigma: f64,
        seed: u64,
    },
    /// IDX image/label files filtered to two classes and subsampled with
    /// balanced classes. The unsampled remainder is the test pool.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        class_a: u8,
        class_b: u8,
        subset: usize,
        seed: u64,
    },
    /// A CSV export (`label,f0,...`).
    Csv { path: PathBuf },
    /// A built-in symmetric layout, or `square_xor` with one point shifted
    /// when `perturbation` is non-zero.
    Layout { kind: LayoutKind, perturbation: f64 },
}

impl DatasetSpec {
    /// Builds the training set and, if `test_size > 0`, a disjoint test set.
    /// Blob test sets hold `test_size / 2` points per class; IDX test sets
    /// take the first `test_size` unsampled samples.
    pub fn materialize(&self, test_size: usize) -> Result<(Dataset, Option<Dataset>)> {
        match self {
            Self::Blobs {
                per_class,
                center0,
                center1,
                sigma,
                seed,
            } => {
                let train = gen_gaussian_blobs(*per_class, [center0, center1], *sigma, *seed)?;
                let test = if test_size > 0 {
                    let per = (test_size / 2).max(1);
                    Some(gen_gaussian_blobs(per, [center0, center1], *sigma, derive_seed(*seed, 1))?.with_name("blobs-test"))
                } else {
                    None
                };
                Ok((train, test))
            }
            Self::Idx {
                images,
                labels,
                class_a,
                class_b,
                subset,
                seed,
            } => {
                let all = load_idx(images, labels)?.filter_binary(*class_a, *class_b)?;
                let (train, rest) = all.split_balanced(*subset, *seed)?;
                let test = if test_size > 0 {
                    if rest.is_empty() {
                        return Err(Error::EmptyDataset);
                    }
                    let take: Vec<usize> = rest.into_iter().take(test_size).collect();
                    Some(all.subset(&take)?.with_name("idx-test"))
                } else {
                    None
                };
                Ok((train, test))
            }
            Self::Csv { path } => {
                if test_size > 0 {
                    return Err(Error::InvalidConfig(
                        "csv datasets carry no test split".into(),
                    ));
                }
                Ok((Dataset::load_csv(path)?, None))
            }
            Self::Layout { kind, perturbation } => {
                if test_size > 0 {
                    return Err(Error::InvalidConfig(
                        "layout datasets carry no test split".into(),
                    ));
                }
                Ok((layout_dataset(*kind, *perturbation)?.data, None))
            }
        }
    }
}

pub(crate) fn layout_dataset(kind: LayoutKind, perturbation: f64) -> Result<crate::data::SymmetricLayout> {
    if perturbation != 0.0 {
        if kind != LayoutKind::SquareXor {
            return Err(Error::InvalidConfig(
                "perturbation applies to square_xor only".into(),
            ));
        }
        return perturbed_square_xor(perturbation);
    }
    gen_symmetric_layout(kind)
}

/// Settings for the iterative projection and generalization tracking runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSpec,
    pub layer_dims: Vec<usize>,
    pub train: TrainConfig,
    pub projector: ProjectorOptions,
    pub iterations: usize,
    /// Master seed; iteration `k` uses seeds derived from `(seed, k)`.
    pub seed: u64,
    /// Abort when more than this fraction of projections fail to converge.
    pub max_unconverged_fraction: f64,
    /// Held-out samples for generalization tracking; 0 disables.
    pub test_size: usize,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        if self.layer_dims.len() < 2 || self.layer_dims.last() != Some(&2) {
            return Err(Error::InvalidConfig(format!(
                "layer_dims must end in 2, got {:?}",
                self.layer_dims
            )));
        }
        if !(0.0..=1.0).contains(&self.max_unconverged_fraction) {
            return Err(Error::InvalidConfig(format!(
                "max_unconverged_fraction must be in [0,1], got {}",
                self.max_unconverged_fraction
            )));
        }
        self.projector.validate()
    }

    /// Training settings for iteration `k` (1-based): positional seeds and a
    /// batch size no larger than the working set.
    pub fn train_for_iteration(&self, k: usize, len: usize) -> TrainConfig {
        let mut t = self.train.clone();
        t.seed = derive_seed(derive_seed(self.seed, k as u64), 1);
        t.batch_size = t.batch_size.min(len);
        t
    }

    pub fn init_seed(&self, k: usize) -> u64 {
        derive_seed(derive_seed(self.seed, k as u64), 0)
    }
}
