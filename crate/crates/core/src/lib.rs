//! Transportation-mode prediction from raw GPS trajectories.
//!
//! The crate covers the whole batch pipeline: GeoLife ingestion and
//! segmentation, per-point kinematic series, the 70 per-segment trajectory
//! features, noise removal, CART trees and random forests, wrapper and
//! importance-ranked feature selection, random and user-oriented
//! cross-validation, and the nonparametric tests used to compare results.

pub mod classify;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geo;
pub mod ingest;
pub mod noise;
pub mod point_features;
pub mod select;
pub mod stats;
pub mod synth;
pub mod traj_features;

mod rng;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
