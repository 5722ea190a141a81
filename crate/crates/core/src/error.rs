use std::path::PathBuf;

use thiserror::Error;

/// Unified error type for the whole crate.
///
/// Variants are grouped by how callers are expected to react: `Argument`
/// and `MissingLabels` are caller bugs or bad configuration, `Io`/`Format`
/// are input-file problems, and the remaining variants are numeric or
/// geometric conditions that make a particular quantity undefined.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dataset has no labels, but the operation requires them")]
    MissingLabels,

    /// A neighbor distance of zero makes log-ratio estimators undefined.
    #[error("degenerate distance: {0}")]
    DegenerateDistance(String),

    /// All neighbor distances equal the largest one; the estimate diverges.
    #[error("infinite estimate: all neighbor distances equal the maximum")]
    InfiniteEstimate,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// Silverman's rule produced a non-positive bandwidth (constant sample).
    #[error("bandwidth error: sample has zero spread, no usable bandwidth")]
    ZeroBandwidth,

    /// A CDF evaluated to zero where a positive probability is required.
    #[error("zero probability: {0}")]
    ZeroProbability(String),

    #[error("infeasible eta: {0}")]
    InfeasibleEta(String),

    /// Geometry that collapses a ratio the bounds depend on (e.g. y = delta*x).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// The directional feasibility interval for eta is empty (delta >= 1).
    #[error("empty eta interval: delta = {delta} admits no directional eta")]
    EmptyEtaInterval { delta: f64 },

    /// The loss gradient vanished; no attack direction exists.
    #[error("zero gradient at the query point")]
    ZeroGradient,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
