use std::path::Path;

use blab_core::boundary::{adversarial_overshoot, project_dataset, ProjectorOptions};
use blab_core::data::{gen_gaussian_blobs, load_idx};
use blab_core::experiments::{run_iterative_projection, DatasetSpec, ExperimentConfig};
use blab_core::field::MarginField;
use blab_core::metrics::nearest_opposite_mean_distance;
use blab_core::nn::{load_checkpoint, save_checkpoint, train, MlpNetwork, StopReason, TrainConfig};

fn mnist_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-subset")
}

#[test]
fn bundled_mnist_subset_loads() {
    let d = mnist_dir();
    let all = load_idx(&d.join("train-images-idx3-ubyte"), &d.join("train-labels-idx1-ubyte")).unwrap();
    assert_eq!(all.dim(), 784);
    assert_eq!(all.len(), 2000);
    let pair = all.filter_binary(3, 5).unwrap();
    assert_eq!(pair.count_label(0), 500);
    assert_eq!(pair.count_label(1), 500);
    let (subset, rest) = pair.split_balanced(400, 1).unwrap();
    assert_eq!(subset.count_label(0), 200);
    assert_eq!(rest.len(), 600);
    assert!(subset.sample(0).iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn train_project_checkpoint() {
    let data = gen_gaussian_blobs(30, [&[0.0, 0.0], &[4.0, 0.0]], 0.6, 11).unwrap();
    let mut net = MlpNetwork::new(&[2, 16, 2], 3).unwrap();
    let cfg = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 20,
        ..TrainConfig::default()
    };
    let report = train(&mut net, &data, &cfg).unwrap();
    assert_eq!(report.stopped_reason, StopReason::CriterionMet);

    let opts = ProjectorOptions::default();
    let (projected, results) = project_dataset(&net, &data, &opts).unwrap();
    for (i, r) in results.iter().enumerate() {
        assert!(r.converged);
        assert!(net.margin(projected.sample(i)).unwrap().abs() <= opts.boundary_tolerance);
        let flipped = net.predict(&adversarial_overshoot(r, 0.1));
        assert_ne!(flipped, Some(data.label(i)));
    }
    assert!(nearest_opposite_mean_distance(&projected).unwrap() < nearest_opposite_mean_distance(&data).unwrap());

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("net.blab");
    save_checkpoint(&net, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    for i in 0..data.len() {
        assert_eq!(back.margin(data.sample(i)).unwrap(), net.margin(data.sample(i)).unwrap());
    }
}

#[test]
fn iterative_projection_is_reproducible() {
    let cfg = ExperimentConfig {
        name: "it".into(),
        dataset: DatasetSpec::Blobs {
            per_class: 20,
            center0: vec![0.0, 0.0],
            center1: vec![4.0, 0.0],
            sigma: 0.5,
            seed: 2,
        },
        layer_dims: vec![2, 16, 2],
        train: TrainConfig {
            learning_rate: 1e-2,
            batch_size: 40,
            ..TrainConfig::default()
        },
        projector: ProjectorOptions::default(),
        iterations: 3,
        seed: 9,
        max_unconverged_fraction: 0.1,
        test_size: 0,
        output_dir: None,
    };
    let a = run_iterative_projection(&cfg).unwrap();
    let b = run_iterative_projection(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 4);
    assert!(a[3].mean_nn_distance < a[0].mean_nn_distance);
}
