//! Local intrinsic dimensionality (LID) of data points under adversarial
//! perturbation: datasets, exact neighbor search, maximum-likelihood LID
//! estimation, smoothed distance CDFs, perturbation geometry, and
//! two-sided LID bounds, plus a deterministic experiment harness that
//! sweeps perturbation magnitudes and emits CSV.

pub mod bounds;
pub mod cdf;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod lid;
pub mod metric;
pub mod perturb;
pub mod stats;

pub use error::{Error, Result};
