//! Synthetic datasets: isotropic gaussian blobs and curated symmetric
//! layouts.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Two isotropic normal clusters, `per_class` points each. Class 0 rows come
/// first.
pub fn gen_gaussian_blobs(
    per_class: usize,
    centers: [&[f64]; 2],
    sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "blob sigma must be positive, got {sigma}"
        )));
    }
    if per_class == 0 {
        return Err(Error::EmptyDataset);
    }
    let dim = centers[0].len();
    if centers[1].len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: centers[1].len(),
        });
    }
    let mut rng = rng_from_seed(seed);
    let mut features = Array2::zeros((2 * per_class, dim));
    let mut labels = Vec::with_capacity(2 * per_class);
    for (class, center) in centers.iter().enumerate() {
        for k in 0..per_class {
            let mut row = features.row_mut(class * per_class + k);
            for (v, c) in row.iter_mut().zip(center.iter()) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = c + sigma * z;
            }
            labels.push(class as u8);
        }
    }
    Dataset::new(features, labels, format!("blobs{dim}d"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    SquareXor,
    MirroredPairs,
    Custom,
}

impl FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square_xor" => Ok(Self::SquareXor),
            "mirrored_pairs" => Ok(Self::MirroredPairs),
            "custom" => Ok(Self::Custom),
            other => Err(Error::UnsupportedLayout(other.to_string())),
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SquareXor => "square_xor",
            Self::MirroredPairs => "mirrored_pairs",
            Self::Custom => "custom",
        })
    }
}

/// A small curated dataset whose symmetry admits more than one projection
/// set onto the same boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricLayout {
    pub kind: LayoutKind,
    pub data: Dataset,
    pub symmetry_note: String,
}

impl SymmetricLayout {
    pub fn custom(data: Dataset, symmetry_note: impl Into<String>) -> Self {
        Self {
            kind: LayoutKind::Custom,
            data,
            symmetry_note: symmetry_note.into(),
        }
    }
}

/// Built-in layouts.
///
/// * `square_xor`: class 0 at `(±1, 0)`, class 1 at `(0, ±1)`. The max-margin
///   boundary is the pair of diagonals `|x1| = |x2|`; every point is
///   equidistant from both, so it has two nearest boundary points.
/// * `mirrored_pairs`: opposite-class pairs `(-1, 1)/(1, 1)` and
///   `(-1, -1)/(1, -1)`, mirror images under `x2 -> -x2`.
///
/// `custom` needs explicit points and is rejected here; use
/// [`SymmetricLayout::custom`].
pub fn gen_symmetric_layout(kind: LayoutKind) -> Result<SymmetricLayout> {
    match kind {
        LayoutKind::SquareXor => Ok(SymmetricLayout {
            kind,
            data: Dataset::from_rows(
                &[
                    vec![1.0, 0.0],
                    vec![-1.0, 0.0],
                    vec![0.0, 1.0],
                    vec![0.0, -1.0],
                ],
                vec![0, 0, 1, 1],
                "square_xor",
            )?,
            symmetry_note: "rotations by 90 degrees and reflections in both axes; \
                            each point projects onto either diagonal"
                .into(),
        }),
        LayoutKind::MirroredPairs => Ok(SymmetricLayout {
            kind,
            data: Dataset::from_rows(
                &[
                    vec![-1.0, 1.0],
                    vec![-1.0, -1.0],
                    vec![1.0, 1.0],
                    vec![1.0, -1.0],
                ],
                vec![0, 0, 1, 1],
                "mirrored_pairs",
            )?,
            symmetry_note: "reflection x2 -> -x2 maps each pair onto the other".into(),
        }),
        LayoutKind::Custom => Err(Error::InvalidConfig(
            "custom layouts need explicit points".into(),
        )),
    }
}

/// `square_xor` with the class-0 point `(1, 0)` moved to `(1, shift)`.
pub fn perturbed_square_xor(shift: f64) -> Result<SymmetricLayout> {
    let data = Dataset::from_rows(
        &[
            vec![1.0, shift],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ],
        vec![0, 0, 1, 1],
        "square_xor_perturbed",
    )?;
    Ok(SymmetricLayout::custom(
        data,
        format!("square_xor with (1,0) moved to (1,{shift}); no symmetry"),
    ))
}
