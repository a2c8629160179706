//! Labeled datasets: construction, IDX ingestion, synthetic layouts and CSV
//! export.

mod idx;
mod synth;

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::fsutil;
use crate::rng::rng_from_seed;

pub use idx::{
    encode_idx_images, encode_idx_labels, load_idx, parse_idx_images, parse_idx_labels,
    write_idx_fixture, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC,
};
pub use synth::{
    gen_gaussian_blobs, gen_symmetric_layout, perturbed_square_xor, LayoutKind, SymmetricLayout,
};

/// An ordered collection of labeled feature vectors.
///
/// Features are stored row-major, one sample per row. Labels are raw class
/// ids; experiment entry points require them to be binary (see
/// [`Dataset::ensure_binary`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    name: String,
}

impl Dataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>, name: impl Into<String>) -> Result<Self> {
        if features.nrows() == 0 || labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if features.nrows() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} samples but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidDataset("zero-dimensional samples".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features"));
        }
        let features = features.as_standard_layout().into_owned();
        Ok(Self {
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>, name: impl Into<String>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let features = Array2::from_shape_vec((rows.len(), dim), flat)
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        Self::new(features, labels, name)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        self.features
            .row(i)
            .to_slice()
            .expect("features are kept in standard layout")
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn count_label(&self, label: u8) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Requires labels in {0,1} with both present.
    pub fn ensure_binary(&self) -> Result<()> {
        if let Some(&bad) = self.labels.iter().find(|&&l| l > 1) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} is not binary; filter the dataset first"
            )));
        }
        if self.count_label(0) == 0 || self.count_label(1) == 0 {
            return Err(Error::SingleClass);
        }
        Ok(())
    }

    /// Dataset with the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let features = self.features.select(Axis(0), indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(features, labels, self.name.clone())
    }

    /// Same labels and name, new feature matrix.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        if features.dim() != self.features.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: features.ncols(),
            });
        }
        Self::new(features, self.labels.clone(), self.name.clone())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        self.with_features(&self.features * factor)
    }

    /// Keeps classes `class_a` and `class_b`, relabeled to 0 and 1 in
    /// argument order. Original sample order is preserved.
    pub fn filter_binary(&self, class_a: u8, class_b: u8) -> Result<Self> {
        if class_a == class_b {
            return Err(Error::InvalidConfig(format!(
                "filter_binary needs two distinct classes, got {class_a} twice"
            )));
        }
        for c in [class_a, class_b] {
            if !self.labels.contains(&c) {
                return Err(Error::ClassAbsent(c));
            }
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.labels[i] == class_a || self.labels[i] == class_b)
            .collect();
        let features = self.features.select(Axis(0), &keep);
        let labels = keep
            .iter()
            .map(|&i| u8::from(self.labels[i] == class_b))
            .collect();
        Self::new(
            features,
            labels,
            format!("{}[{class_a}v{class_b}]", self.name),
        )
    }

    /// Draws `total / 2` samples of each binary class without replacement.
    /// Selected samples keep their relative order from `self`.
    pub fn sample_balanced(&self, total: usize, seed: u64) -> Result<Self> {
        Ok(self.split_balanced(total, seed)?.0)
    }

    /// Like [`Dataset::sample_balanced`], also returning the indices that were
    /// not drawn (in original order) so callers can build a disjoint holdout.
    pub fn split_balanced(&self, total: usize, seed: u64) -> Result<(Self, Vec<usize>)> {
        if total == 0 || total % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "balanced sample size must be even and positive, got {total}"
            )));
        }
        self.ensure_binary()?;
        let per_class = total / 2;
        let mut rng = rng_from_seed(seed);
        let mut chosen = Vec::with_capacity(total);
        for class in [0u8, 1] {
            let members: Vec<usize> = (0..self.len())
                .filter(|&i| self.labels[i] == class)
                .collect();
            if members.len() < per_class {
                return Err(Error::InsufficientSamples {
                    class,
                    needed: per_class,
                    available: members.len(),
                });
            }
            let picks = index::sample(&mut rng, members.len(), per_class);
            chosen.extend(picks.into_iter().map(|k| members[k]));
        }
        chosen.sort_unstable();
        let mut taken = vec![false; self.len()];
        for &i in &chosen {
            taken[i] = true;
        }
        let rest = (0..self.len()).filter(|&i| !taken[i]).collect();
        Ok((self.subset(&chosen)?, rest))
    }

    /// CSV with header `label,f0,f1,...`. Values use Rust's shortest
    /// round-trip formatting, so parsing the output restores identical bits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * self.dim() * 8);
        out.push_str("label");
        for j in 0..self.dim() {
            let _ = write!(out, ",f{j}");
        }
        out.push('\n');
        for (row, label) in self.features.rows().into_iter().zip(&self.labels) {
            let _ = write!(out, "{label}");
            for v in row {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, name: impl Into<String>) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::EmptyDataset)?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.first() != Some(&"label") {
            return Err(Error::InvalidDataset(format!(
                "CSV header must start with `label`, got `{header}`"
            )));
        }
        let dim = cols.len() - 1;
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut fields = line.split(',');
            let bad = |what: &str| {
                Error::InvalidDataset(format!("CSV line {}: {what}", lineno + 2))
            };
            let label = fields
                .next()
                .and_then(|l| l.trim().parse::<u8>().ok())
                .ok_or_else(|| bad("bad label"))?;
            let before = flat.len();
            for f in fields {
                flat.push(f.trim().parse::<f64>().map_err(|_| bad("bad value"))?);
            }
            if flat.len() - before != dim {
                return Err(bad("wrong number of columns"));
            }
            labels.push(label);
        }
        let features = Array2::from_shape_vec((labels.len(), dim), flat)
            .map_err(|e| Error::InvalidDataset(e.to_string()))?;
        Self::new(features, labels, name)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        fsutil::write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let text = fsutil::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_csv(&text, name)
    }
}
