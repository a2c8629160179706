//! Distance and alignment measurements used by the experiments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{project_dataset, ProjectorOptions};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::field::MarginField;
use crate::nn::MlpNetwork;

/// Mean over samples of the Euclidean distance to the closest sample of the
/// other class.
pub fn nearest_opposite_mean_distance(data: &Dataset) -> Result<f64> {
    data.ensure_binary()?;
    let per_sample: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let xi = data.sample(i);
            let li = data.label(i);
            (0..data.len())
                .filter(|&j| data.label(j) != li)
                .map(|j| sq_dist(xi, data.sample(j)))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    // Sequential sum keeps the result independent of the thread count.
    Ok(per_sample.iter().sum::<f64>() / data.len() as f64)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalDifferenceEstimate {
    pub alphas: Vec<f64>,
    pub phi: f64,
    pub aligned_count: usize,
    pub misaligned_count: usize,
    pub cosine_threshold: f64,
}

/// Scores how much of each `f` projection vector a second classifier `g`
/// reproduces at the projected point.
///
/// A pair counts as aligned when the cosine similarity reaches
/// `cosine_threshold`; its alpha is then `|g| / |f|` clamped to `[0, 1]`.
/// Misaligned pairs and zero-length vectors get alpha 0.
pub fn global_difference_from_vectors(
    f_vectors: &[Vec<f64>],
    g_vectors: &[Vec<f64>],
    cosine_threshold: f64,
) -> Result<GlobalDifferenceEstimate> {
    if !(cosine_threshold > 0.0 && cosine_threshold <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "cosine_threshold must lie in (0, 1], got {cosine_threshold}"
        )));
    }
    if f_vectors.len() != g_vectors.len() {
        return Err(Error::DimensionMismatch {
            expected: f_vectors.len(),
            got: g_vectors.len(),
        });
    }
    if f_vectors.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut alphas = Vec::with_capacity(f_vectors.len());
    let mut aligned = 0;
    for (f, g) in f_vectors.iter().zip(g_vectors) {
        if f.len() != g.len() {
            return Err(Error::DimensionMismatch {
                expected: f.len(),
                got: g.len(),
            });
        }
        let (nf, ng) = (norm(f), norm(g));
        if nf == 0.0 || ng == 0.0 {
            alphas.push(0.0);
            continue;
        }
        let cos = f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / (nf * ng);
        if cos >= cosine_threshold {
            aligned += 1;
            alphas.push((ng / nf).clamp(0.0, 1.0));
        } else {
            alphas.push(0.0);
        }
    }
    let s = alphas.len();
    let phi = s as f64 - alphas.iter().sum::<f64>();
    Ok(GlobalDifferenceEstimate {
        alphas,
        phi,
        aligned_count: aligned,
        misaligned_count: s - aligned,
        cosine_threshold,
    })
}

/// Estimates the global difference of the projection `original -> projected`
/// (made by some classifier `f`) using `g` as the competing separator of the
/// projected set.
///
/// `g` must classify every projected sample correctly.
pub fn estimate_global_difference<G: MarginField + ?Sized>(
    original: &Dataset,
    projected: &Dataset,
    g: &G,
    cosine_threshold: f64,
    opts: &ProjectorOptions,
) -> Result<GlobalDifferenceEstimate> {
    if original.len() != projected.len() {
        return Err(Error::DimensionMismatch {
            expected: original.len(),
            got: projected.len(),
        });
    }
    if original.labels() != projected.labels() {
        return Err(Error::InvalidDataset(
            "original and projected labels differ".into(),
        ));
    }
    for i in 0..projected.len() {
        if g.predict(projected.sample(i)) != Some(projected.label(i)) {
            return Err(Error::Misclassified { index: i });
        }
    }
    let f_vectors: Vec<Vec<f64>> = (0..original.len())
        .map(|i| {
            projected
                .sample(i)
                .iter()
                .zip(original.sample(i))
                .map(|(p, x)| p - x)
                .collect()
        })
        .collect();
    let (_, results) = project_dataset(g, projected, opts)?;
    let g_vectors: Vec<Vec<f64>> = results
        .into_iter()
        .map(|r| if r.converged { r.vector } else { vec![0.0; r.origin.len()] })
        .collect();
    global_difference_from_vectors(&f_vectors, &g_vectors, cosine_threshold)
}

/// `(train_acc, test_acc, train_acc - test_acc)`.
pub fn generalization_gap(net: &MlpNetwork, train: &Dataset, test: &Dataset) -> Result<(f64, f64, f64)> {
    let train_acc = net.accuracy(train)?;
    let test_acc = net.accuracy(test)?;
    Ok((train_acc, test_acc, train_acc - test_acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LinearField;
    use proptest::prelude::*;

    fn ds(rows: &[[f64; 2]], labels: &[u8]) -> Dataset {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        Dataset::from_rows(&rows, labels.to_vec(), "t").unwrap()
    }

    #[test]
    fn single_pair() {
        let d = ds(&[[0.0, 0.0], [3.0, 4.0]], &[0, 1]);
        assert_eq!(nearest_opposite_mean_distance(&d).unwrap(), 5.0);
    }

    #[test]
    fn four_points() {
        let d = ds(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [2.0, 1.0]], &[0, 0, 1, 1]);
        let want = (1.0 + 2f64.sqrt() + 1.0 + 2.0) / 4.0;
        let got = nearest_opposite_mean_distance(&d).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 1.353553).abs() < 1e-6);
    }

    #[test]
    fn single_class_rejected() {
        let d = ds(&[[0.0, 0.0], [1.0, 1.0]], &[0, 0]);
        assert!(nearest_opposite_mean_distance(&d).is_err());
    }

    #[test]
    fn scaling_is_homogeneous() {
        let d = ds(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [2.0, 1.0]], &[0, 0, 1, 1]);
        let base = nearest_opposite_mean_distance(&d).unwrap();
        let scaled = nearest_opposite_mean_distance(&d.scaled(2.0).unwrap()).unwrap();
        assert_eq!(scaled, 2.0 * base);
    }

    #[test]
    fn identical_vectors_give_zero_phi() {
        let f = vec![vec![1.0, 0.0], vec![0.0, -2.0]];
        let est = global_difference_from_vectors(&f, &f, 0.95).unwrap();
        assert_eq!(est.alphas, vec![1.0, 1.0]);
        assert_eq!(est.phi, 0.0);
        assert_eq!(est.aligned_count, 2);
    }

    #[test]
    fn orthogonal_vectors_give_full_phi() {
        let f = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let g = vec![vec![0.0, 1.0], vec![-1.0, 0.0]];
        let est = global_difference_from_vectors(&f, &g, 0.95).unwrap();
        assert_eq!(est.phi, 2.0);
        assert_eq!(est.misaligned_count, 2);
    }

    #[test]
    fn zero_f_vector_counts_as_zero_alpha() {
        let f = vec![vec![0.0, 0.0]];
        let g = vec![vec![1.0, 0.0]];
        let est = global_difference_from_vectors(&f, &g, 0.95).unwrap();
        assert_eq!(est.alphas, vec![0.0]);
    }

    #[test]
    fn threshold_out_of_range() {
        let f = vec![vec![1.0]];
        assert!(global_difference_from_vectors(&f, &f, 0.0).is_err());
        assert!(global_difference_from_vectors(&f, &f, 1.5).is_err());
    }

    #[test]
    fn estimate_with_same_linear_boundary() {
        let orig = ds(&[[-1.0, 0.0], [1.0, 0.5]], &[0, 1]);
        let proj = ds(&[[0.0, 0.0], [0.0, 0.5]], &[0, 1]);
        let g = LinearField { w: vec![1.0, 0.0], b: 0.0 };
        // Projected points sit on g's boundary, so g does not classify them.
        assert!(estimate_global_difference(&orig, &proj, &g, 0.95, &ProjectorOptions::default()).is_err());
    }

    #[test]
    fn estimate_with_parallel_boundary() {
        let orig = ds(&[[-2.0, 0.0], [2.0, 0.0]], &[0, 1]);
        let proj = ds(&[[-1.0, 0.0], [1.0, 0.0]], &[0, 1]);
        // f moved each point by (+-1, 0); g's boundary x1 = 0 moves them by the same.
        let g = LinearField { w: vec![1.0, 0.0], b: 0.0 };
        let est = estimate_global_difference(&orig, &proj, &g, 0.95, &ProjectorOptions::default()).unwrap();
        for a in &est.alphas {
            assert!((a - 1.0).abs() < 1e-6);
        }
        assert!(est.phi.abs() < 1e-5);
    }

    #[test]
    fn generalization_gap_identical_sets() {
        let d = ds(&[[-1.0, 0.0], [1.0, 0.0]], &[0, 1]);
        let net = crate::nn::MlpNetwork::from_layers(vec![crate::nn::DenseLayer {
            weights: ndarray::array![[0.0, 0.0], [1.0, 0.0]],
            biases: ndarray::Array1::zeros(2),
        }])
        .unwrap();
        let (tr, te, gap) = generalization_gap(&net, &d, &d).unwrap();
        assert_eq!((tr, te, gap), (1.0, 1.0, 0.0));
    }

    fn orthogonal(dim: usize, seed: &[f64]) -> Vec<Vec<f64>> {
        // Gram-Schmidt on a seeded matrix.
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for r in 0..dim {
            let mut v: Vec<f64> = (0..dim).map(|c| seed[r * dim + c]).collect();
            for b in &basis {
                let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            let n = norm(&v);
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
        basis
    }

    proptest! {
        #[test]
        fn isometry_invariance(
            pts in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 3), 4..12),
            m in proptest::collection::vec(0.1f64..1.0, 9),
            shift in proptest::collection::vec(-3.0f64..3.0, 3),
        ) {
            let labels: Vec<u8> = (0..pts.len()).map(|i| (i % 2) as u8).collect();
            let d = Dataset::from_rows(&pts, labels.clone(), "p").unwrap();
            let mut mm = m.clone();
            mm[0] += 2.0; mm[4] += 2.0; mm[8] += 2.0;
            let q = orthogonal(3, &mm);
            let moved: Vec<Vec<f64>> = pts.iter().map(|p| {
                q.iter().zip(&shift).map(|(row, s)| row.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + s).collect()
            }).collect();
            let d2 = Dataset::from_rows(&moved, labels, "p").unwrap();
            let a = nearest_opposite_mean_distance(&d).unwrap();
            let b = nearest_opposite_mean_distance(&d2).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn phi_within_bounds(
            f in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 1..10),
            g_seed in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 10),
            t in 0.5f64..1.0,
        ) {
            let g: Vec<Vec<f64>> = g_seed.into_iter().take(f.len()).collect();
            let est = global_difference_from_vectors(&f, &g, t).unwrap();
            prop_assert!(est.phi >= 0.0 && est.phi <= f.len() as f64);
            prop_assert!(est.alphas.iter().all(|a| (0.0..=1.0).contains(a)));
            let sum: f64 = est.alphas.iter().sum();
            prop_assert!((est.phi - (f.len() as f64 - sum)).abs() < 1e-9);
        }

        #[test]
        fn shrinking_g_never_decreases_phi(
            f in proptest::collection::vec(proptest::collection::vec(-2.0f64..2.0, 2), 1..8),
            scale in proptest::collection::vec(0.1f64..2.0, 8),
            shrink in 0.0f64..1.0,
            idx in 0usize..8,
        ) {
            let g: Vec<Vec<f64>> = f.iter().zip(&scale).map(|(v, s)| v.iter().map(|x| x * s).collect()).collect();
            let k = idx % f.len();
            let mut g2 = g.clone();
            g2[k].iter_mut().for_each(|x| *x *= shrink);
            let a = global_difference_from_vectors(&f, &g, 0.95).unwrap();
            let b = global_difference_from_vectors(&f, &g2, 0.95).unwrap();
            prop_assert!(b.phi >= a.phi - 1e-12);
        }
    }
}
