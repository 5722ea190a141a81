//! Synthetic datasets with a known intrinsic dimension: points drawn inside
//! an `m`-dimensional linear subspace of an `n`-dimensional ambient space.
//! The subspace is spanned by an orthonormal frame obtained from a seeded
//! Gaussian matrix, so every sample is an exact linear combination of the
//! frame and carries zero off-subspace residual.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Uniform in the unit ball of the subspace.
    UniformBall,
    /// Standard normal in the subspace coordinates.
    GaussianSubspace,
}

impl SynthKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SynthKind::UniformBall => "uniform-ball",
            SynthKind::GaussianSubspace => "gaussian",
        }
    }
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform-ball" => Ok(SynthKind::UniformBall),
            "gaussian" => Ok(SynthKind::GaussianSubspace),
            other => Err(Error::Argument(format!(
                "unknown synthetic kind {other:?}, expected uniform-ball or gaussian"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub intrinsic_dim: usize,
    pub ambient_dim: usize,
    pub n: usize,
    pub kind: SynthKind,
    pub seed: u64,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.intrinsic_dim == 0 {
            return Err(Error::Argument(
                "intrinsic dimension must be positive".into(),
            ));
        }
        if self.ambient_dim < self.intrinsic_dim {
            return Err(Error::Argument(format!(
                "ambient dimension {} smaller than intrinsic dimension {}",
                self.ambient_dim, self.intrinsic_dim
            )));
        }
        if self.n == 0 {
            return Err(Error::Argument("sample count must be positive".into()));
        }
        Ok(())
    }

    pub fn dataset_name(&self) -> String {
        format!(
            "synth-{}-m{}-d{}",
            self.kind.as_str(),
            self.intrinsic_dim,
            self.ambient_dim
        )
    }
}

/// Orthonormal columns spanning a random `m`-dimensional subspace of R^d.
/// Modified Gram-Schmidt with one re-orthogonalization pass; a Gaussian
/// matrix is almost surely full rank, but rank loss is still checked.
fn random_orthonormal_frame(rng: &mut ChaCha8Rng, d: usize, m: usize) -> Result<Vec<Vec<f64>>> {
    let normal = StandardNormal;
    let mut cols: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..d).map(|_| normal.sample(rng)).collect())
        .collect();
    for j in 0..m {
        for _pass in 0..2 {
            for i in 0..j {
                let proj: f64 = cols[j].iter().zip(&cols[i]).map(|(a, b)| a * b).sum();
                for t in 0..d {
                    cols[j][t] -= proj * cols[i][t];
                }
            }
        }
        let norm: f64 = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Numeric(
                "rank-deficient Gaussian frame; retry with another seed".into(),
            ));
        }
        for t in 0..d {
            cols[j][t] /= norm;
        }
    }
    Ok(cols)
}

/// Generates a dataset per `spec`. Bitwise deterministic for a fixed seed:
/// generation is single-threaded and draws from one seeded stream.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let (m, d, n) = (spec.intrinsic_dim, spec.ambient_dim, spec.n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let frame = random_orthonormal_frame(&mut rng, d, m)?;

    let normal = StandardNormal;
    let unit = Uniform::new(0.0f64, 1.0);
    let mut points = vec![0.0; n * d];
    let mut coeffs = vec![0.0; m];
    for p in 0..n {
        for c in coeffs.iter_mut() {
            *c = normal.sample(&mut rng);
        }
        match spec.kind {
            SynthKind::UniformBall => {
                // Direction from the normalized Gaussian, radius U^(1/m)
                // so volume is uniform in the ball.
                let norm: f64 = coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    // Probability zero; map to the origin.
                    coeffs.iter_mut().for_each(|c| *c = 0.0);
                } else {
                    let radius = unit.sample(&mut rng).powf(1.0 / m as f64);
                    let scale = radius / norm;
                    coeffs.iter_mut().for_each(|c| *c *= scale);
                }
            }
            SynthKind::GaussianSubspace => {}
        }
        let row = &mut points[p * d..(p + 1) * d];
        for (j, col) in frame.iter().enumerate() {
            let c = coeffs[j];
            for t in 0..d {
                row[t] += c * col[t];
            }
        }
    }
    Dataset::new(spec.dataset_name(), d, points, None)
}
