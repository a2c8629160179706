use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn blab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blab"))
        .args(args)
        .current_dir(root())
        .output()
        .expect("spawn blab")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn blobs_run_writes_records_and_chart() {
    let tmp = tempfile::tempdir().unwrap();
    let out = blab(&["iterproj", "configs/blobs2d.cfg", "--output_dir", path_str(tmp.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(tmp.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7, "header + 6 records:\n{csv}");
    let svg = std::fs::read_to_string(tmp.path().join("chart.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 6);
    assert!(svg.contains(">iteration<") && svg.contains(">mean distance<"));
    for k in 1..=5 {
        assert!(tmp.path().join(format!("checkpoints/iter_{k}.blab")).exists());
        assert!(tmp.path().join(format!("projections/iter_{k}.csv")).exists());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");

    // The echoed config reproduces the run.
    let echo = manifest["config_echo"].as_str().unwrap();
    let cfg = tmp.path().join("echo.cfg");
    std::fs::write(&cfg, echo).unwrap();
    let again = tempfile::tempdir().unwrap();
    let out = blab(&["iterproj", path_str(&cfg), "--output_dir", path_str(again.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read_to_string(again.path().join("records.csv")).unwrap(), csv);
}

#[test]
fn iterations_override_gives_two_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = blab(&[
        "iterproj",
        "configs/blobs2d.cfg",
        "--iterations",
        "1",
        "--output_dir",
        path_str(tmp.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(tmp.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn stop_and_resume_matches_full_run() {
    let full = tempfile::tempdir().unwrap();
    let part = tempfile::tempdir().unwrap();
    let base = ["iterproj", "configs/blobs2d.cfg", "--iterations", "3", "--output_dir"];
    let run = |dir: &Path, extra: &[&str]| {
        let mut args: Vec<&str> = base.to_vec();
        args.push(path_str(dir));
        args.extend_from_slice(extra);
        blab(&args)
    };
    assert!(run(full.path(), &[]).status.success());
    assert!(run(part.path(), &["--stop-after", "1"]).status.success());
    let o = run(part.path(), &["--resume"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(full.path().join("records.csv")).unwrap(),
        std::fs::read_to_string(part.path().join("records.csv")).unwrap()
    );
}

#[test]
fn missing_dataset_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = blab(&[
        "iterproj",
        "configs/mnist3v5.cfg",
        "--dataset.images",
        "nowhere/images.idx",
        "--output_dir",
        path_str(tmp.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("nowhere/images.idx"), "{}", stderr(&out));
}

#[test]
fn unknown_key_is_a_config_error() {
    let out = blab(&["iterproj", "configs/blobs2d.cfg", "--train.learning_rat", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("train.learning_rat"), "{}", stderr(&out));

    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "iterations 3\n").unwrap();
    let out = blab(&["iterproj", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn transfer_report_rates_are_fractions() {
    let tmp = tempfile::tempdir().unwrap();
    let out = blab(&["transfer", "configs/transfer_models.cfg", "--output_dir", path_str(tmp.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    for key in ["fooling_rate_transfer", "fooling_rate_source", "fooling_rate_random_baseline"] {
        let v = report[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn symmetry_square_has_several_clusters() {
    let out = blab(&["symmetry", "configs/symmetry_square.cfg"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["cluster_count"].as_u64().unwrap() >= 2);
}

#[test]
fn verify_suites_and_exit_codes() {
    let out = blab(&["verify", "gradients"]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).contains("100/100"), "{}", stdout(&out));

    let out = blab(&["verify", "claims", "--instance", "configs/claim2_counterexample.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("failing instance"));
    assert!(stdout(&out).contains("\"g_vectors\""));

    let out = blab(&["verify", "claims", "--instance", "configs/claim2_collinear.json"]);
    assert!(out.status.success(), "{}", stdout(&out));

    assert_eq!(blab(&["verify", "sideways"]).status.code(), Some(2));
}

#[test]
fn plot_is_deterministic_and_rejects_empty_input() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("records.csv");
    let mut text = String::from("iteration,mean_nn_distance,mean_projection_norm,train_acc,test_acc,unconverged_count\n0,3.0,,,,\n");
    for k in 1..6 {
        text.push_str(&format!("{k},{},0.5,1.0,,0\n", 3.0 - 0.4 * k as f64));
    }
    std::fs::write(&csv, text).unwrap();
    let a = tmp.path().join("a.svg");
    let b = tmp.path().join("b.svg");
    assert!(blab(&["plot", path_str(&csv), path_str(&a)]).status.success());
    assert!(blab(&["plot", path_str(&csv), path_str(&b)]).status.success());
    let svg = std::fs::read(&a).unwrap();
    assert_eq!(svg, std::fs::read(&b).unwrap());
    assert_eq!(String::from_utf8(svg).unwrap().matches("<circle").count(), 6);

    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = blab(&["plot", path_str(&empty), path_str(&a)]);
    assert!(!out.status.success());
}

#[test]
fn gen_data_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out_csv = tmp.path().join("blobs.csv");
    let out = blab(&["gen-data", "configs/blobs2d.cfg", "--out", path_str(&out_csv), "--test_size", "20"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(text.starts_with("label,f0,f1\n"));
    let test = std::fs::read_to_string(tmp.path().join("blobs_test.csv")).unwrap();
    assert_eq!(test.lines().count(), 21);

    let out = blab(&["gen-data", "configs/blobs2d.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_env_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_blab"))
        .args(["verify", "claims"])
        .env("BLAB_THREADS", "zero")
        .current_dir(root())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_blab"))
        .args(["verify", "claims"])
        .env("BLAB_THREADS", "1")
        .current_dir(root())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
}
