//! Echo-state network surrogate for the 1D viscous shallow-water equations.
//!
//! The crate has four layers:
//!
//! - [`swe`]: a well-balanced, second-order finite-volume solver on a periodic
//!   domain with bump topography. It produces ground-truth trajectories.
//! - [`esn`]: reservoir construction, driving, ridge-regression readout
//!   training, closed-loop prediction and the closed-form transfer-learning
//!   correction of the readout.
//! - [`datasets`] and [`metrics`]: randomized initial conditions, training-set
//!   concatenation, the nine test suites and the normalized L² error curves.
//! - [`harness`]: experiment configuration, presets and the commands behind the
//!   `swe-esn` binary.
//!
//! Data-parallel loops (trajectory generation, Gram accumulation, suite
//! evaluation) go through [`exec::Exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to plain iteration otherwise.

pub mod datasets;
pub mod error;
pub mod esn;
pub mod exec;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod swe;

pub use error::{Error, Result};
pub use exec::Exec;
