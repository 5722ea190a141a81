//! Dataset loading, synthesis, and subsampling.
//!
//! All loaders produce the same in-memory shape: a dense row-major matrix of
//! `f64` features in [0, 1] for image data, plus optional integer class
//! labels. Feature vectors are validated (finite, consistent width) at
//! construction and immutable afterwards, so downstream code can index
//! without re-checking.

mod cifar;
mod csvfile;
mod idx;
mod synth;

pub use cifar::load_cifar10;
pub use csvfile::{load_csv, write_csv};
pub use idx::load_mnist;
pub use synth::{generate_synthetic, SynthKind, SynthSpec};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A fixed collection of points in a common ambient dimension, with
/// optional class labels aligned to the points.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    dim: usize,
    points: Vec<f64>,
    labels: Option<Vec<u32>>,
}

impl Dataset {
    /// Builds a dataset from a flat row-major buffer of `n * dim` values.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        points: Vec<f64>,
        labels: Option<Vec<u32>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("dataset dimension must be positive".into()));
        }
        if points.is_empty() || points.len() % dim != 0 {
            return Err(Error::Argument(format!(
                "point buffer length {} is not a positive multiple of dim {}",
                points.len(),
                dim
            )));
        }
        if let Some(bad) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "non-finite feature value at flat index {bad}"
            )));
        }
        let n = points.len() / dim;
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::Argument(format!(
                    "label count {} does not match point count {}",
                    labels.len(),
                    n
                )));
            }
        }
        Ok(Dataset {
            name: name.into(),
            dim,
            points,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one point
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<u32> {
        self.labels.as_ref().map(|l| l[i])
    }

    /// Number of distinct classes, computed as `max(label) + 1`.
    pub fn n_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m as usize + 1))
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }
}

/// Uniform subsample without replacement, deterministic in `seed`.
///
/// The kept points appear in their original relative order, so repeated
/// subsampling with the same seed is stable and `n_keep = len` returns the
/// dataset unchanged (an identity permutation).
pub fn subsample(data: &Dataset, n_keep: usize, seed: u64) -> Result<Dataset> {
    let n = data.len();
    if n_keep == 0 || n_keep > n {
        return Err(Error::Argument(format!(
            "cannot keep {n_keep} of {n} points"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Partial Fisher-Yates over the index vector, then sort the kept
    // prefix to preserve original order.
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..n_keep {
        let j = rng.gen_range(i..n);
        idx.swap(i, j);
    }
    let mut kept = idx[..n_keep].to_vec();
    kept.sort_unstable();

    let mut points = Vec::with_capacity(n_keep * data.dim);
    for &i in &kept {
        points.extend_from_slice(data.point(i));
    }
    let labels = data
        .labels
        .as_ref()
        .map(|l| kept.iter().map(|&i| l[i]).collect());
    Dataset::new(data.name.clone(), data.dim, points, labels)
}
