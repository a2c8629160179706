//! Typed experiment settings to and from [`Document`]s.

use std::path::PathBuf;

use blab_core::boundary::ProjectorOptions;
use blab_core::data::LayoutKind;
use blab_core::experiments::{DatasetSpec, ExperimentConfig, SymmetryConfig, TransferConfig, TransferMode};
use blab_core::nn::{OptimizerKind, TrainConfig};

use crate::config::{Document, Reader, Writer};
use crate::error::CliError;

fn read_dataset(r: &mut Reader) -> Result<DatasetSpec, CliError> {
    let source: String = r.req("dataset.source")?;
    Ok(match source.as_str() {
        "blobs" => DatasetSpec::Blobs {
            per_class: r.req("dataset.per_class")?,
            center0: r.req_list("dataset.center0")?,
            center1: r.req_list("dataset.center1")?,
            sigma: r.req("dataset.sigma")?,
            seed: r.or("dataset.seed", 0)?,
        },
        "idx" => DatasetSpec::Idx {
            images: r.req("dataset.images")?,
            labels: r.req("dataset.labels")?,
            class_a: r.req("dataset.class_a")?,
            class_b: r.req("dataset.class_b")?,
            subset: r.req("dataset.subset")?,
            seed: r.or("dataset.seed", 0)?,
        },
        "csv" => DatasetSpec::Csv {
            path: r.req("dataset.path")?,
        },
        "layout" => DatasetSpec::Layout {
            kind: r.req::<LayoutKind>("dataset.kind")?,
            perturbation: r.or("dataset.perturbation", 0.0)?,
        },
        other => {
            return Err(CliError::Config(format!(
                "key `dataset.source`: unknown source `{other}` (blobs, idx, csv, layout)"
            )))
        }
    })
}

fn write_dataset(w: &mut Writer, d: &DatasetSpec) {
    match d {
        DatasetSpec::Blobs {
            per_class,
            center0,
            center1,
            sigma,
            seed,
        } => {
            w.text("dataset.source", "blobs");
            w.int("dataset.per_class", per_class);
            w.nums("dataset.center0", center0);
            w.nums("dataset.center1", center1);
            w.num("dataset.sigma", *sigma);
            w.int("dataset.seed", seed);
        }
        DatasetSpec::Idx {
            images,
            labels,
            class_a,
            class_b,
            subset,
            seed,
        } => {
            w.text("dataset.source", "idx");
            w.text("dataset.images", images.display());
            w.text("dataset.labels", labels.display());
            w.int("dataset.class_a", class_a);
            w.int("dataset.class_b", class_b);
            w.int("dataset.subset", subset);
            w.int("dataset.seed", seed);
        }
        DatasetSpec::Csv { path } => {
            w.text("dataset.source", "csv");
            w.text("dataset.path", path.display());
        }
        DatasetSpec::Layout { kind, perturbation } => {
            w.text("dataset.source", "layout");
            w.text("dataset.kind", kind);
            w.num("dataset.perturbation", *perturbation);
        }
    }
}

fn read_train(r: &mut Reader) -> Result<TrainConfig, CliError> {
    let d = TrainConfig::default();
    Ok(TrainConfig {
        optimizer: r.named::<OptimizerKind>("train.optimizer")?.unwrap_or(d.optimizer),
        learning_rate: r.or("train.learning_rate", d.learning_rate)?,
        momentum: r.or("train.momentum", d.momentum)?,
        adam_betas: (
            r.or("train.adam_beta1", d.adam_betas.0)?,
            r.or("train.adam_beta2", d.adam_betas.1)?,
        ),
        adam_epsilon: r.or("train.adam_epsilon", d.adam_epsilon)?,
        max_epochs: r.or("train.max_epochs", d.max_epochs)?,
        batch_size: r.or("train.batch_size", d.batch_size)?,
        accuracy_target: r.or("train.accuracy_target", d.accuracy_target)?,
        // Per-run seeds are derived from the experiment seed.
        seed: 0,
    })
}

fn write_train(w: &mut Writer, t: &TrainConfig) {
    w.named("train.optimizer", &t.optimizer);
    w.num("train.learning_rate", t.learning_rate);
    w.num("train.momentum", t.momentum);
    w.num("train.adam_beta1", t.adam_betas.0);
    w.num("train.adam_beta2", t.adam_betas.1);
    w.num("train.adam_epsilon", t.adam_epsilon);
    w.int("train.max_epochs", t.max_epochs);
    w.int("train.batch_size", t.batch_size);
    w.num("train.accuracy_target", t.accuracy_target);
}

fn read_projector(r: &mut Reader) -> Result<ProjectorOptions, CliError> {
    let d = ProjectorOptions::default();
    Ok(ProjectorOptions {
        boundary_tolerance: r.or("projector.boundary_tolerance", d.boundary_tolerance)?,
        max_newton_steps: r.or("projector.max_newton_steps", d.max_newton_steps)?,
        max_refine_steps: r.or("projector.max_refine_steps", d.max_refine_steps)?,
        refine_tolerance: r.or("projector.refine_tolerance", d.refine_tolerance)?,
        overshoot_kappa: r.or("projector.overshoot_kappa", d.overshoot_kappa)?,
        max_step: r.or("projector.max_step", d.max_step)?,
        ray_starts: r.or("projector.ray_starts", d.ray_starts)?,
    })
}

fn write_projector(w: &mut Writer, p: &ProjectorOptions) {
    w.num("projector.boundary_tolerance", p.boundary_tolerance);
    w.int("projector.max_newton_steps", p.max_newton_steps);
    w.int("projector.max_refine_steps", p.max_refine_steps);
    w.num("projector.refine_tolerance", p.refine_tolerance);
    w.num("projector.overshoot_kappa", p.overshoot_kappa);
    w.num("projector.max_step", p.max_step);
    w.int("projector.ray_starts", p.ray_starts);
}

pub fn read_experiment(doc: &Document) -> Result<ExperimentConfig, CliError> {
    let mut r = doc.reader();
    let cfg = ExperimentConfig {
        name: r.or("name", "run".to_string())?,
        dataset: read_dataset(&mut r)?,
        layer_dims: r.req_list("layer_dims")?,
        train: read_train(&mut r)?,
        projector: read_projector(&mut r)?,
        iterations: r.req("iterations")?,
        seed: r.or("seed", 0)?,
        max_unconverged_fraction: r.or("max_unconverged_fraction", 0.1)?,
        test_size: r.or("test_size", 0)?,
        output_dir: r.opt::<PathBuf>("output_dir")?,
    };
    r.finish()?;
    Ok(cfg)
}

pub fn write_experiment(c: &ExperimentConfig) -> Document {
    let mut w = Writer::default();
    w.text("name", &c.name);
    write_dataset(&mut w, &c.dataset);
    w.ints("layer_dims", &c.layer_dims);
    write_train(&mut w, &c.train);
    write_projector(&mut w, &c.projector);
    w.int("iterations", c.iterations);
    w.int("seed", c.seed);
    w.num("max_unconverged_fraction", c.max_unconverged_fraction);
    w.int("test_size", c.test_size);
    if let Some(o) = &c.output_dir {
        w.text("output_dir", o.display());
    }
    w.doc
}

/// A transfer or symmetry run together with where its report goes.
#[derive(Debug, Clone, PartialEq)]
pub struct Job<C> {
    pub config: C,
    pub output_dir: Option<PathBuf>,
}

pub fn read_transfer(doc: &Document) -> Result<Job<TransferConfig>, CliError> {
    let mut r = doc.reader();
    let mode: TransferMode = r.req("mode")?;
    let source_dims: Vec<usize> = r.req_list("source_dims")?;
    let target_dims = match mode {
        TransferMode::CrossModel => r.req_list("target_dims")?,
        TransferMode::CrossTrainingSet => r.list("target_dims")?.unwrap_or_else(|| source_dims.clone()),
    };
    let config = TransferConfig {
        dataset: read_dataset(&mut r)?,
        mode,
        source_dims,
        target_dims,
        train: read_train(&mut r)?,
        projector: read_projector(&mut r)?,
        kappa: r.or("kappa", 0.1)?,
        test_size: r.req("test_size")?,
        seed: r.or("seed", 0)?,
    };
    let output_dir = r.opt("output_dir")?;
    r.finish()?;
    Ok(Job { config, output_dir })
}

pub fn write_transfer(job: &Job<TransferConfig>) -> Document {
    let c = &job.config;
    let mut w = Writer::default();
    w.named("mode", &c.mode);
    w.ints("source_dims", &c.source_dims);
    w.ints("target_dims", &c.target_dims);
    write_dataset(&mut w, &c.dataset);
    write_train(&mut w, &c.train);
    write_projector(&mut w, &c.projector);
    w.num("kappa", c.kappa);
    w.int("test_size", c.test_size);
    w.int("seed", c.seed);
    if let Some(o) = &job.output_dir {
        w.text("output_dir", o.display());
    }
    w.doc
}

pub fn read_symmetry(doc: &Document) -> Result<Job<SymmetryConfig>, CliError> {
    let mut r = doc.reader();
    let config = SymmetryConfig {
        kind: r.req("kind")?,
        perturbation: r.or("perturbation", 0.0)?,
        trials: r.or("trials", 20)?,
        layer_dims: r.req_list("layer_dims")?,
        train: read_train(&mut r)?,
        projector: read_projector(&mut r)?,
        kappa: r.or("kappa", 0.1)?,
        cluster_cosine: r.or("cluster_cosine", 0.9)?,
        seed: r.or("seed", 0)?,
    };
    let output_dir = r.opt("output_dir")?;
    r.finish()?;
    Ok(Job { config, output_dir })
}

pub fn write_symmetry(job: &Job<SymmetryConfig>) -> Document {
    let c = &job.config;
    let mut w = Writer::default();
    w.text("kind", c.kind);
    w.num("perturbation", c.perturbation);
    w.int("trials", c.trials);
    w.ints("layer_dims", &c.layer_dims);
    write_train(&mut w, &c.train);
    write_projector(&mut w, &c.projector);
    w.num("kappa", c.kappa);
    w.num("cluster_cosine", c.cluster_cosine);
    w.int("seed", c.seed);
    if let Some(o) = &job.output_dir {
        w.text("output_dir", o.display());
    }
    w.doc
}

/// The `[dataset]` section and `test_size` of any config; other keys are
/// ignored.
pub fn read_dataset_section(doc: &Document) -> Result<(DatasetSpec, usize), CliError> {
    let mut r = doc.reader();
    let spec = read_dataset(&mut r)?;
    let test_size = r.or("test_size", 0)?;
    r.finish_section("dataset")?;
    Ok((spec, test_size))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLOBS: &str = "name = t\nlayer_dims = 2,8,2\niterations = 3\nseed = 5\n\n[dataset]\nsource = blobs\nper_class = 10\ncenter0 = 0,0\ncenter1 = 4,0\nsigma = 0.5\n\n[train]\nlearning_rate = 1e-2\n";

    #[test]
    fn experiment_round_trip() {
        let cfg = read_experiment(&Document::parse(BLOBS).unwrap()).unwrap();
        assert_eq!(cfg.train.learning_rate, 0.01);
        assert_eq!(cfg.layer_dims, vec![2, 8, 2]);
        let text = write_experiment(&cfg).render();
        let again = read_experiment(&Document::parse(&text).unwrap()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(write_experiment(&again).render(), text);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = format!("{BLOBS}learning_rat = 3\n");
        let err = read_experiment(&Document::parse(&text).unwrap()).unwrap_err();
        assert!(err.to_string().contains("train.learning_rat"), "{err}");
    }

    #[test]
    fn bad_enum_value_is_config_error() {
        let text = format!("{BLOBS}optimizer = rmsprop\n");
        let err = read_experiment(&Document::parse(&text).unwrap()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn transfer_and_symmetry_round_trip() {
        let t = "mode = cross_training_set\nsource_dims = 2,16,2\ntest_size = 40\nseed = 3\n[dataset]\nsource = blobs\nper_class = 20\ncenter0 = 0,0\ncenter1 = 4,0\nsigma = 1\n";
        let job = read_transfer(&Document::parse(t).unwrap()).unwrap();
        assert_eq!(job.config.target_dims, job.config.source_dims);
        let back = read_transfer(&Document::parse(&write_transfer(&job).render()).unwrap()).unwrap();
        assert_eq!(back, job);

        let s = "kind = square_xor\nlayer_dims = 2,16,2\ntrials = 4\noutput_dir = out\n";
        let job = read_symmetry(&Document::parse(s).unwrap()).unwrap();
        let back = read_symmetry(&Document::parse(&write_symmetry(&job).render()).unwrap()).unwrap();
        assert_eq!(back, job);
    }

    #[test]
    fn cross_model_needs_target_dims() {
        let t = "mode = cross_model\nsource_dims = 2,16,2\ntest_size = 4\n[dataset]\nsource = csv\npath = x.csv\n";
        assert!(read_transfer(&Document::parse(t).unwrap()).is_err());
    }
}
