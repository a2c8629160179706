//! Experiment runners: iterative projection, generalization tracking,
//! adversarial transfer and the symmetric-layout study.

mod config;
mod iterproj;
mod symmetry;
mod transfer;

pub use config::{DatasetSpec, ExperimentConfig};
pub use iterproj::{
    records_from_csv, records_to_csv, run_generalization_tracking, run_iterative_projection,
    run_with_options, IterationRecord, RunKind, RunManifest, RunOptions, RunStatus, RECORDS_HEADER,
    RUN_FORMAT_VERSION,
};
pub use symmetry::{run_symmetry_experiment, SymmetryConfig, SymmetryReport};
pub use transfer::{run_transfer, TransferConfig, TransferMode, TransferReport};
