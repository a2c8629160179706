use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::boundary::{project_dataset, projections_csv};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fsutil::{self, write_atomic};
use crate::metrics::nearest_opposite_mean_distance;
use crate::nn::{save_checkpoint, train, MlpNetwork};

pub const RUN_FORMAT_VERSION: u32 = 1;

/// Metrics for one pass of the projection loop. Record 0 describes the raw
/// working set and only carries the distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mean_nn_distance: f64,
    pub mean_projection_norm: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub unconverged_count: Option<usize>,
    pub epochs_run: Option<usize>,
}

pub const RECORDS_HEADER: &str =
    "iteration,mean_nn_distance,mean_projection_norm,train_acc,test_acc,unconverged_count";

fn opt<T: std::fmt::Debug>(v: &Option<T>) -> String {
    v.as_ref().map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn records_to_csv(records: &[IterationRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{:?},{},{},{},{}\n",
            r.iteration,
            r.mean_nn_distance,
            opt(&r.mean_projection_norm),
            opt(&r.train_accuracy),
            opt(&r.test_accuracy),
            opt(&r.unconverged_count),
        ));
    }
    out
}

/// Parses a records CSV. `epochs_run` is not part of the CSV and comes back
/// as `None`.
pub fn records_from_csv(text: &str) -> Result<Vec<IterationRecord>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == RECORDS_HEADER => {}
        Some(h) => {
            return Err(Error::InvalidDataset(format!(
                "records header mismatch: expected '{RECORDS_HEADER}', found '{h}'"
            )))
        }
        None => return Err(Error::EmptyDataset),
    }
    fn field<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> Result<Option<T>> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|_| Error::InvalidDataset(format!("line {line}: bad {name} '{s}'")))
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let ln = n + 2;
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(Error::InvalidDataset(format!(
                "line {ln}: expected 6 columns, found {}",
                cols.len()
            )));
        }
        let iteration = field(cols[0], ln, "iteration")?
            .ok_or_else(|| Error::InvalidDataset(format!("line {ln}: missing iteration")))?;
        let mean_nn_distance = field(cols[1], ln, "mean_nn_distance")?
            .ok_or_else(|| Error::InvalidDataset(format!("line {ln}: missing mean_nn_distance")))?;
        out.push(IterationRecord {
            iteration,
            mean_nn_distance,
            mean_projection_norm: field(cols[2], ln, "mean_projection_norm")?,
            train_accuracy: field(cols[3], ln, "train_acc")?,
            test_accuracy: field(cols[4], ln, "test_acc")?,
            unconverged_count: field(cols[5], ln, "unconverged_count")?,
            epochs_run: None,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if out.windows(2).any(|w| w[1].iteration <= w[0].iteration) {
        return Err(Error::InvalidDataset("iterations must increase".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Iterproj,
    Gentrack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    /// Stopped on request before the last iteration; resumable.
    Partial,
    Complete,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub kind: RunKind,
    pub config: ExperimentConfig,
    /// Caller-supplied text form of the configuration.
    pub config_echo: Option<String>,
    pub status: RunStatus,
    pub completed_iterations: usize,
    pub records: Vec<IterationRecord>,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub abort_reason: Option<String>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("manifest.json");
        let text = fsutil::read_to_string(&path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let found = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::InvalidDataset(format!("{}: no format_version", path.display())))?;
        if found != RUN_FORMAT_VERSION as u64 {
            return Err(Error::VersionMismatch {
                expected: RUN_FORMAT_VERSION,
                found: found as u32,
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    fn store(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_atomic(&dir.join("manifest.json"), text.as_bytes())
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Knobs that do not affect results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Continue from the manifest in the output directory if there is one.
    pub resume: bool,
    /// Stop (resumably) after this iteration.
    pub stop_after: Option<usize>,
    pub config_echo: Option<String>,
}

struct RunDir {
    root: PathBuf,
}

impl RunDir {
    fn points(&self, k: usize) -> PathBuf {
        self.root.join("projections").join(format!("iter_{k}_points.csv"))
    }

    fn projections(&self, k: usize) -> PathBuf {
        self.root.join("projections").join(format!("iter_{k}.csv"))
    }

    fn checkpoint(&self, k: usize) -> PathBuf {
        self.root.join("checkpoints").join(format!("iter_{k}.blab"))
    }

    fn records(&self) -> PathBuf {
        self.root.join("records.csv")
    }
}

struct Step {
    record: IterationRecord,
    net: MlpNetwork,
    projected: Dataset,
    dump: String,
}

fn run_step(cfg: &ExperimentConfig, k: usize, working: &Dataset, test: Option<&Dataset>) -> Result<Step> {
    let mut net = MlpNetwork::new(&cfg.layer_dims, cfg.init_seed(k))?;
    if net.input_dim() != working.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: working.dim(),
        });
    }
    let report = train(&mut net, working, &cfg.train_for_iteration(k, working.len()))?;
    if report.final_train_accuracy < 1.0 {
        return Err(Error::Aborted(format!(
            "iteration {k}: training stopped after {} epochs with train accuracy {}",
            report.epochs_run, report.final_train_accuracy
        )));
    }
    let (projected, results) = project_dataset(&net, working, &cfg.projector)?;
    let unconverged = results.iter().filter(|r| !r.converged).count();
    let dump = projections_csv(working, &results);
    let limit = cfg.max_unconverged_fraction * working.len() as f64;
    if unconverged as f64 > limit {
        return Err(Error::Aborted(format!(
            "iteration {k}: {unconverged} of {} projections did not converge",
            working.len()
        )));
    }
    let mean_norm = results.iter().map(|r| if r.converged { r.distance } else { 0.0 }).sum::<f64>()
        / results.len() as f64;
    let test_accuracy = match test {
        Some(t) => Some(net.accuracy(t)?),
        None => None,
    };
    Ok(Step {
        record: IterationRecord {
            iteration: k,
            mean_nn_distance: nearest_opposite_mean_distance(&projected)?,
            mean_projection_norm: Some(mean_norm),
            train_accuracy: Some(report.final_train_accuracy),
            test_accuracy,
            unconverged_count: Some(unconverged),
            epochs_run: Some(report.epochs_run),
        },
        net,
        projected,
        dump,
    })
}

/// Iterative projection: train a freshly seeded network on the working set,
/// replace the working set by its projection onto that network's boundary,
/// repeat. Returns record 0 (raw set) followed by one record per iteration.
pub fn run_iterative_projection(cfg: &ExperimentConfig) -> Result<Vec<IterationRecord>> {
    run_loop(cfg, RunKind::Iterproj, &RunOptions::default())
}

/// As [`run_iterative_projection`], measuring each iteration's network on a
/// held-out test set that is never projected.
pub fn run_generalization_tracking(cfg: &ExperimentConfig) -> Result<Vec<IterationRecord>> {
    run_loop(cfg, RunKind::Gentrack, &RunOptions::default())
}

pub fn run_with_options(cfg: &ExperimentConfig, kind: RunKind, opts: &RunOptions) -> Result<Vec<IterationRecord>> {
    run_loop(cfg, kind, opts)
}

fn run_loop(cfg: &ExperimentConfig, kind: RunKind, opts: &RunOptions) -> Result<Vec<IterationRecord>> {
    cfg.validate()?;
    if kind == RunKind::Gentrack && cfg.test_size == 0 {
        return Err(Error::InvalidConfig("generalization tracking needs test_size > 0".into()));
    }
    let test_size = if kind == RunKind::Gentrack { cfg.test_size } else { 0 };
    let (raw, test) = cfg.dataset.materialize(test_size)?;
    raw.ensure_binary()?;
    if let Some(t) = &test {
        if t.is_empty() {
            return Err(Error::EmptyDataset);
        }
    }
    let dir = cfg.output_dir.as_ref().map(|p| RunDir { root: p.clone() });

    let mut manifest = RunManifest {
        format_version: RUN_FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        kind,
        config: cfg.clone(),
        config_echo: opts.config_echo.clone(),
        status: RunStatus::Running,
        completed_iterations: 0,
        records: Vec::new(),
        started_unix: now_unix(),
        finished_unix: None,
        abort_reason: None,
    };

    let mut working = raw.clone();
    let mut start = 1;
    let resumed = match &dir {
        Some(d) if opts.resume && d.root.join("manifest.json").exists() => {
            let old = RunManifest::load(&d.root)?;
            if old.config != *cfg || old.kind != kind {
                return Err(Error::InvalidConfig(format!(
                    "{} holds a run with a different configuration",
                    d.root.display()
                )));
            }
            if old.status == RunStatus::Complete {
                return Ok(old.records);
            }
            let done = old.completed_iterations;
            working = Dataset::load_csv(&d.points(done))?.with_name(raw.name());
            manifest.records = old.records.into_iter().take(done + 1).collect();
            manifest.completed_iterations = done;
            manifest.started_unix = old.started_unix;
            start = done + 1;
            true
        }
        _ => false,
    };

    if !resumed {
        manifest.records.push(IterationRecord {
            iteration: 0,
            mean_nn_distance: nearest_opposite_mean_distance(&raw)?,
            mean_projection_norm: None,
            train_accuracy: None,
            test_accuracy: None,
            unconverged_count: None,
            epochs_run: None,
        });
        if let Some(d) = &dir {
            working.save_csv(&d.points(0))?;
            write_atomic(&d.records(), records_to_csv(&manifest.records).as_bytes())?;
            manifest.store(&d.root)?;
        }
    }

    for k in start..=cfg.iterations {
        let step = match run_step(cfg, k, &working, test.as_ref()) {
            Ok(s) => s,
            Err(e) => {
                if let Some(d) = &dir {
                    manifest.status = RunStatus::Aborted;
                    manifest.abort_reason = Some(e.to_string());
                    manifest.finished_unix = Some(now_unix());
                    manifest.store(&d.root)?;
                }
                return Err(e);
            }
        };
        manifest.records.push(step.record);
        manifest.completed_iterations = k;
        if let Some(d) = &dir {
            save_checkpoint(&step.net, &d.checkpoint(k))?;
            write_atomic(&d.projections(k), step.dump.as_bytes())?;
            step.projected.save_csv(&d.points(k))?;
            write_atomic(&d.records(), records_to_csv(&manifest.records).as_bytes())?;
            manifest.store(&d.root)?;
        }
        working = step.projected;
        if opts.stop_after == Some(k) && k < cfg.iterations {
            if let Some(d) = &dir {
                manifest.status = RunStatus::Partial;
                manifest.store(&d.root)?;
            }
            return Ok(manifest.records);
        }
    }

    manifest.status = RunStatus::Complete;
    manifest.finished_unix = Some(now_unix());
    if let Some(d) = &dir {
        manifest.store(&d.root)?;
    }
    Ok(manifest.records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ProjectorOptions;
    use crate::experiments::config::DatasetSpec;
    use crate::nn::TrainConfig;

    fn cfg(iterations: usize, out: Option<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            name: "t".into(),
            dataset: DatasetSpec::Blobs {
                per_class: 15,
                center0: vec![0.0, 0.0],
                center1: vec![4.0, 0.0],
                sigma: 0.5,
                seed: 3,
            },
            layer_dims: vec![2, 32, 2],
            train: TrainConfig {
                learning_rate: 1e-2,
                batch_size: 30,
                ..TrainConfig::default()
            },
            projector: ProjectorOptions::default(),
            iterations,
            seed: 1,
            max_unconverged_fraction: 0.1,
            test_size: 0,
            output_dir: out,
        }
    }

    #[test]
    fn one_iteration_gives_two_records() {
        let r = run_iterative_projection(&cfg(1, None)).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].iteration, 0);
        assert!(r[0].train_accuracy.is_none());
        assert_eq!(r[1].train_accuracy, Some(1.0));
    }

    #[test]
    fn record_zero_is_raw_distance() {
        let c = cfg(1, None);
        let (raw, _) = c.dataset.materialize(0).unwrap();
        let r = run_iterative_projection(&c).unwrap();
        assert_eq!(r[0].mean_nn_distance, nearest_opposite_mean_distance(&raw).unwrap());
    }

    #[test]
    fn projection_norm_bounded_by_previous_distance() {
        let r = run_iterative_projection(&cfg(3, None)).unwrap();
        for w in r.windows(2) {
            assert!(w[1].mean_projection_norm.unwrap() <= w[0].mean_nn_distance + 1e-6);
        }
    }

    #[test]
    fn records_csv_round_trip() {
        let r = run_iterative_projection(&cfg(2, None)).unwrap();
        let csv = records_to_csv(&r);
        let back = records_from_csv(&csv).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in r.iter().zip(&back) {
            assert_eq!(a.mean_nn_distance, b.mean_nn_distance);
            assert_eq!(a.mean_projection_norm, b.mean_projection_norm);
            assert_eq!(a.unconverged_count, b.unconverged_count);
        }
        assert_eq!(records_to_csv(&back), csv);
    }

    #[test]
    fn records_csv_rejects_bad_header() {
        assert!(records_from_csv("a,b\n1,2\n").is_err());
        assert!(records_from_csv("").is_err());
        assert!(records_from_csv(&format!("{RECORDS_HEADER}\n")).is_err());
    }

    #[test]
    fn run_directory_layout() {
        let tmp = tempfile::tempdir().unwrap();
        let c = cfg(2, Some(tmp.path().to_path_buf()));
        run_iterative_projection(&c).unwrap();
        for p in [
            "manifest.json",
            "records.csv",
            "checkpoints/iter_1.blab",
            "checkpoints/iter_2.blab",
            "projections/iter_1.csv",
            "projections/iter_2.csv",
        ] {
            assert!(tmp.path().join(p).exists(), "{p}");
        }
        let m = RunManifest::load(tmp.path()).unwrap();
        assert_eq!(m.status, RunStatus::Complete);
        assert_eq!(m.config, c);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let full = run_iterative_projection(&cfg(4, None)).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let c = cfg(4, Some(tmp.path().to_path_buf()));
        let opts = RunOptions {
            stop_after: Some(2),
            ..RunOptions::default()
        };
        let part = run_with_options(&c, RunKind::Iterproj, &opts).unwrap();
        assert_eq!(part.len(), 3);
        assert_eq!(RunManifest::load(tmp.path()).unwrap().status, RunStatus::Partial);
        let resumed = run_with_options(
            &c,
            RunKind::Iterproj,
            &RunOptions {
                resume: true,
                ..RunOptions::default()
            },
        )
        .unwrap();
        assert_eq!(resumed, full);
        // Resuming a finished run is a no-op.
        let again = run_with_options(
            &c,
            RunKind::Iterproj,
            &RunOptions {
                resume: true,
                ..RunOptions::default()
            },
        )
        .unwrap();
        assert_eq!(again, full);
    }

    #[test]
    fn wrong_manifest_version_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let c = cfg(1, Some(tmp.path().to_path_buf()));
        run_iterative_projection(&c).unwrap();
        let path = tmp.path().join("manifest.json");
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("\"format_version\": 1", "\"format_version\": 9")).unwrap();
        assert!(matches!(
            RunManifest::load(tmp.path()),
            Err(Error::VersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn gentrack_needs_test_split() {
        assert!(run_generalization_tracking(&cfg(1, None)).is_err());
        let mut c = cfg(2, None);
        c.test_size = 40;
        let r = run_generalization_tracking(&c).unwrap();
        assert!(r[0].test_accuracy.is_none());
        assert!(r[1..].iter().all(|x| x.test_accuracy.is_some() && x.train_accuracy.is_some()));
        assert!(r[1].test_accuracy.unwrap() > 0.9);
    }

    #[test]
    fn deterministic_records() {
        let a = run_iterative_projection(&cfg(2, None)).unwrap();
        let b = run_iterative_projection(&cfg(2, None)).unwrap();
        assert_eq!(records_to_csv(&a), records_to_csv(&b));
    }

    #[test]
    fn unconverged_limit_aborts_with_dump() {
        let tmp = tempfile::tempdir().unwrap();
        let mut c = cfg(2, Some(tmp.path().to_path_buf()));
        // No solver reaches a residual this small.
        c.projector.boundary_tolerance = 1e-300;
        c.projector.max_refine_steps = 0;
        c.projector.ray_starts = 0;
        let err = run_iterative_projection(&c).unwrap_err();
        assert!(matches!(err, Error::Aborted(_)), "{err}");
        let m = RunManifest::load(tmp.path()).unwrap();
        assert_eq!(m.status, RunStatus::Aborted);
        assert_eq!(m.records.len(), 1);
        assert!(m.abort_reason.unwrap().contains("did not converge"));
    }
}
