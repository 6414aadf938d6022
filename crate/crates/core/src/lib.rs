//! Streaming stochastic optimization: SGD, clamped Adagrad, and streaming
//! stochastic Newton methods whose inverse curvature is maintained with
//! rank-one updates, plus weighted Polyak-Ruppert averaging and a replicated
//! experiment harness.

pub mod averaging;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod schedules;

pub use averaging::AveragerState;
pub use error::{Error, LinalgError, Result};
pub use linalg::SymMatrix;
pub use optimizers::{
    curvature_ingest, AdagradState, CurvatureParams, InverseCurvatureState, Method, Optimizer,
    OptimizerConfig, OptimizerState,
};
pub use problems::{CurvaturePair, Problem, Sample};
pub use schedules::{BatchSchedule, ClampParams, LogWeightSchedule, Schedules, StepMode, StepSchedule};

/// Crate version recorded in run metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
