//! Euclidean distances and exact brute-force k-nearest-neighbor search.
//!
//! Exactness and determinism matter more than speed here: neighbor sets
//! feed maximum-likelihood dimension estimates, so approximate search or
//! nondeterministic tie handling would contaminate everything downstream.
//! Ties are broken by the smaller dataset index.

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Euclidean distance between two points of equal dimension.
pub fn euclidean(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Argument(format!(
            "dimension mismatch: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut sum = 0.0;
    for (a, b) in p.iter().zip(q) {
        let d = a - b;
        sum += d * d;
    }
    Ok(sum.sqrt())
}

/// Sorted neighbor distances paired with their dataset indices.
///
/// Invariants enforced at construction: equal lengths, distances ascending
/// and non-negative, the largest distance strictly positive, indices
/// distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborList {
    distances: Vec<f64>,
    indices: Vec<usize>,
}

impl NeighborList {
    pub fn new(distances: Vec<f64>, indices: Vec<usize>) -> Result<Self> {
        if distances.is_empty() || distances.len() != indices.len() {
            return Err(Error::Argument(format!(
                "neighbor list shape mismatch: {} distances, {} indices",
                distances.len(),
                indices.len()
            )));
        }
        if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::Argument(
                "neighbor distances must be finite and non-negative".into(),
            ));
        }
        if distances.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Argument(
                "neighbor distances must be ascending".into(),
            ));
        }
        let r_max = *distances.last().unwrap();
        if r_max <= 0.0 {
            return Err(Error::DegenerateDistance(
                "largest neighbor distance is zero".into(),
            ));
        }
        let mut seen = indices.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument("duplicate neighbor indices".into()));
        }
        Ok(NeighborList { distances, indices })
    }

    pub fn k(&self) -> usize {
        self.distances.len()
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn r_max(&self) -> f64 {
        *self.distances.last().unwrap()
    }
}

/// Exact k-nearest neighbors of `query` within `data`.
///
/// `exclude` removes one dataset index from consideration, used to drop the
/// query itself when it is a member of the dataset. Equal distances are
/// ordered by index, so results are reproducible across runs.
pub fn knn(
    data: &Dataset,
    query: &[f64],
    k: usize,
    exclude: Option<usize>,
) -> Result<NeighborList> {
    let n = data.len();
    let available = n - usize::from(exclude.is_some());
    if k == 0 || k > available {
        return Err(Error::Argument(format!(
            "k = {k} out of range for {available} available points"
        )));
    }
    if let Some(e) = exclude {
        if e >= n {
            return Err(Error::Argument(format!("exclude index {e} out of range")));
        }
    }
    if query.len() != data.dim() {
        return Err(Error::Argument(format!(
            "query dimension {} does not match dataset dimension {}",
            query.len(),
            data.dim()
        )));
    }
    let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(available);
    for i in 0..n {
        if exclude == Some(i) {
            continue;
        }
        let d = euclidean(query, data.point(i))?;
        pairs.push((d, i));
    }
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    pairs.truncate(k);
    let (distances, indices) = pairs.into_iter().unzip();
    NeighborList::new(distances, indices)
}

/// Distances from `query` to every point, in dataset index order. With
/// `exclude`, the corresponding entry is omitted (length `n - 1`).
pub fn all_distances(data: &Dataset, query: &[f64], exclude: Option<usize>) -> Result<Vec<f64>> {
    if query.len() != data.dim() {
        return Err(Error::Argument(format!(
            "query dimension {} does not match dataset dimension {}",
            query.len(),
            data.dim()
        )));
    }
    if let Some(e) = exclude {
        if e >= data.len() {
            return Err(Error::Argument(format!("exclude index {e} out of range")));
        }
    }
    let mut out = Vec::with_capacity(data.len() - usize::from(exclude.is_some()));
    for i in 0..data.len() {
        if exclude == Some(i) {
            continue;
        }
        out.push(euclidean(query, data.point(i))?);
    }
    Ok(out)
}
