use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use blab_core::experiments::{
    records_from_csv, records_to_csv, run_symmetry_experiment, run_transfer, run_with_options, RunKind,
    RunOptions, RUN_FORMAT_VERSION,
};
use blab_core::oracle::VectorProjectionInstance;
use blab_core::verify::{run_suite, Suite, VerifyOptions};
use blab_core::write_atomic;
use serde::Serialize;

use crate::config::{parse_overrides, Document};
use crate::error::CliError;
use crate::specs::{read_dataset_section, read_experiment, read_symmetry, read_transfer, write_experiment,
    write_symmetry, write_transfer};
use crate::svg::{line_chart, Chart};

/// Flags that steer a run rather than configure it. They are pulled out of
/// the trailing arguments before the `--key value` overrides are parsed.
#[derive(Debug, Default, PartialEq)]
pub struct RunControl {
    pub resume: bool,
    pub stop_after: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn split_control(args: &[String]) -> Result<(RunControl, Vec<(String, String)>), CliError> {
    let mut ctl = RunControl::default();
    let mut rest = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--resume" => ctl.resume = true,
            "--stop-after" | "--out" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Config(format!("`{a}` needs a value")))?;
                if a == "--out" {
                    ctl.out = Some(PathBuf::from(v));
                } else {
                    ctl.stop_after = Some(
                        v.parse()
                            .map_err(|_| CliError::Config(format!("`--stop-after`: bad iteration `{v}`")))?,
                    );
                }
            }
            _ => rest.push(a.clone()),
        }
    }
    Ok((ctl, parse_overrides(&rest)?))
}

fn load_doc(config: &Path, overrides: &[(String, String)]) -> Result<Document, CliError> {
    let mut doc = Document::load(config)?;
    doc.apply_overrides(overrides);
    Ok(doc)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(blab_core::Error::from)?;
    write_atomic(path, format!("{text}\n").as_bytes())?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Core(blab_core::Error::io(dir, e)))
}

pub fn distance_chart(title: &str, csv: &str) -> Result<String, CliError> {
    let records = records_from_csv(csv)?;
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.iteration as f64, r.mean_nn_distance))
        .collect();
    Ok(line_chart(&Chart {
        title,
        x_label: "iteration",
        y_label: "mean distance",
        points: &points,
    }))
}

/// `iterproj` and `gentrack`: records.csv, chart.svg and the run directory
/// contents written by the experiment runner.
pub fn cmd_run(kind: RunKind, config: &Path, args: &[String]) -> Result<(), CliError> {
    let (ctl, overrides) = split_control(args)?;
    let doc = load_doc(config, &overrides)?;
    let mut cfg = read_experiment(&doc)?;
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("runs").join(&cfg.name));
    }
    let dir = cfg.output_dir.clone().expect("set above");
    ensure_dir(&dir)?;
    let opts = RunOptions {
        resume: ctl.resume,
        stop_after: ctl.stop_after,
        config_echo: Some(write_experiment(&cfg).render()),
    };
    let records = run_with_options(&cfg, kind, &opts)?;
    let csv = records_to_csv(&records);
    write_atomic(&dir.join("records.csv"), csv.as_bytes())?;
    let title = match kind {
        RunKind::Iterproj => format!("{}: distance between classes", cfg.name),
        RunKind::Gentrack => format!("{}: distance between classes (generalization run)", cfg.name),
    };
    write_atomic(&dir.join("chart.svg"), distance_chart(&title, &csv)?.as_bytes())?;
    print!("{csv}");
    eprintln!("wrote {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct ReportManifest<'a> {
    format_version: u32,
    tool_version: &'a str,
    kind: &'a str,
    config_echo: String,
    status: &'a str,
    started_unix: u64,
    finished_unix: u64,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn emit_report<T: Serialize>(
    kind: &str,
    out: Option<&Path>,
    echo: String,
    started: u64,
    report: &T,
) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).map_err(blab_core::Error::from)?;
    println!("{text}");
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_json(&dir.join("report.json"), report)?;
        write_json(
            &dir.join("manifest.json"),
            &ReportManifest {
                format_version: RUN_FORMAT_VERSION,
                tool_version: env!("CARGO_PKG_VERSION"),
                kind,
                config_echo: echo,
                status: "complete",
                started_unix: started,
                finished_unix: now_unix(),
            },
        )?;
        eprintln!("wrote {}", dir.display());
    }
    Ok(())
}

pub fn cmd_transfer(config: &Path, args: &[String]) -> Result<(), CliError> {
    let (_, overrides) = split_control(args)?;
    let started = now_unix();
    let job = read_transfer(&load_doc(config, &overrides)?)?;
    let report = run_transfer(&job.config)?;
    emit_report("transfer", job.output_dir.as_deref(), write_transfer(&job).render(), started, &report)
}

pub fn cmd_symmetry(config: &Path, args: &[String]) -> Result<(), CliError> {
    let (_, overrides) = split_control(args)?;
    let started = now_unix();
    let job = read_symmetry(&load_doc(config, &overrides)?)?;
    let report = run_symmetry_experiment(&job.config)?;
    emit_report("symmetry", job.output_dir.as_deref(), write_symmetry(&job).render(), started, &report)
}

pub fn cmd_verify(suite: &str, seed: u64, instance: Option<&Path>, report: Option<&Path>) -> Result<(), CliError> {
    let suite: Suite = suite.parse()?;
    let claims_instance = match instance {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Core(blab_core::Error::io(p, e)))?;
            let inst: VectorProjectionInstance = serde_json::from_str(&text).map_err(blab_core::Error::from)?;
            inst.validate()?;
            Some(inst)
        }
        None => None,
    };
    let result = run_suite(suite, &VerifyOptions { seed, claims_instance })?;
    print!("{}", result.table());
    if let Some(p) = report {
        write_json(p, &result)?;
    }
    if result.passed {
        return Ok(());
    }
    if let Some(inst) = &result.failing_instance {
        let text = serde_json::to_string_pretty(inst).map_err(blab_core::Error::from)?;
        println!("failing instance:\n{text}");
    }
    Err(CliError::VerifyFailed(format!("suite {suite} failed")))
}

pub fn cmd_plot(records: &Path, output: &Path, title: Option<&str>) -> Result<(), CliError> {
    let csv = std::fs::read_to_string(records).map_err(|e| CliError::Core(blab_core::Error::io(records, e)))?;
    let title = title.unwrap_or("distance between classes");
    write_atomic(output, distance_chart(title, &csv)?.as_bytes())?;
    Ok(())
}

/// Materializes the `[dataset]` section of a config as CSV. A test split,
/// when `test_size > 0`, goes next to it with a `_test` suffix.
pub fn cmd_gen_data(config: &Path, args: &[String]) -> Result<(), CliError> {
    let (ctl, overrides) = split_control(args)?;
    let out = ctl
        .out
        .ok_or_else(|| CliError::Config("gen-data needs `--out <file.csv>`".into()))?;
    let (spec, test_size) = read_dataset_section(&load_doc(config, &overrides)?)?;
    let (train, test) = spec.materialize(test_size)?;
    train.save_csv(&out)?;
    if let Some(t) = test {
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        t.save_csv(&out.with_file_name(format!("{stem}_test.csv")))?;
    }
    eprintln!("wrote {} samples to {}", train.len(), out.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn control_flags_are_split_out() {
        let (ctl, rest) = split_control(&strings(&["--resume", "--iterations", "2", "--stop-after", "1"])).unwrap();
        assert!(ctl.resume);
        assert_eq!(ctl.stop_after, Some(1));
        assert_eq!(rest, vec![("iterations".to_string(), "2".to_string())]);
        assert!(split_control(&strings(&["--stop-after"])).is_err());
        assert!(split_control(&strings(&["--stop-after", "x"])).is_err());
    }

    #[test]
    fn chart_from_records() {
        let csv = "iteration,mean_nn_distance,mean_projection_norm,train_acc,test_acc,unconverged_count\n0,3.0,,,,\n1,2.0,0.5,1.0,,0\n";
        let svg = distance_chart("t", csv).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(distance_chart("t", "").is_err());
    }
}
