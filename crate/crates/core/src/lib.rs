//! Decision-boundary laboratory.
//!
//! Trains small binary classifiers, projects samples onto their decision
//! boundaries and runs the iterative-projection, transferability, symmetry and
//! generalization experiments built on those projections.

pub mod boundary;
pub mod data;
pub mod error;
pub mod experiments;
pub mod field;
mod fsutil;
pub mod metrics;
pub mod nn;
pub mod oracle;
pub mod rng;
pub mod verify;

pub use error::{Error, ErrorClass, Result};
pub use fsutil::write_atomic;
