//! The perturbation sweep: seeded query selection, reference-point
//! choice, attack directions, a delta grid, and eta-averaged bounds,
//! emitted as CSV rows plus a per-delta plot-data aggregation.
//!
//! For each query a, the reference c is a's nearest neighbor of rank
//! k/2 (integer division). Each delta in the grid perturbs a by
//! delta * |a - c| along the query's attack direction into b; the
//! distance CDF is fit on all distances from b to the working sample,
//! the LID of b is estimated from its k nearest neighbors, and the
//! sandwich bounds are averaged over the feasible eta grid, excluding
//! numerically unstable evaluations (excluded counts are reported, rows
//! are never dropped).
//!
//! Determinism: every random choice draws from its own counter-derived
//! stream of the experiment seed, rows are keyed by (query, delta) and
//! assembled in that order, and per-row reductions sum sequentially with
//! compensation, so output bytes are identical across runs and thread
//! counts.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bounds::{eta_grid, lid_bounds, GridVariant};
use crate::cdf::DistanceCdf;
use crate::dataset::{subsample, Dataset};
use crate::error::{Error, Result};
use crate::lid::mle_lid;
use crate::metric::{all_distances, knn};
use crate::perturb::{make_triple, train_surrogate, DirectionClass};
use crate::stats::{kahan_sum, mean, standard_error};

/// Where each query's unit attack direction comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionSource {
    /// Train a softmax surrogate on the working sample and take the
    /// sign-of-gradient direction at each query. Requires labels.
    Surrogate { epochs: usize, learning_rate: f64 },
    /// Seeded isotropic random unit vectors; the label-free fallback.
    Random,
    /// Externally computed directions, one per query in query order.
    Provided(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Subsample the dataset to this size first; `None` uses it whole.
    pub subsample: Option<usize>,
    /// Neighborhood size for both the reference rank and the estimator.
    pub k: usize,
    /// Number of query points.
    pub n_q: usize,
    /// Ascending positive perturbation sizes, as fractions of x.
    pub delta_grid: Vec<f64>,
    /// Candidates per eta feasibility grid.
    pub eta_grid_size: usize,
    /// Master seed; all streams derive from it.
    pub seed: u64,
    pub direction_source: DirectionSource,
}

impl ExperimentConfig {
    /// Checks the config against the working sample size n.
    fn validate(&self, n: usize) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Argument(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if self.k >= n {
            return Err(Error::Argument(format!(
                "k = {} must be smaller than the sample size {n}",
                self.k
            )));
        }
        if self.n_q == 0 || self.n_q > n {
            return Err(Error::Argument(format!(
                "query count {} must be in 1..={n}",
                self.n_q
            )));
        }
        if self.delta_grid.is_empty() {
            return Err(Error::Argument("delta grid must be nonempty".into()));
        }
        for pair in self.delta_grid.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::Argument(
                    "delta grid must be strictly ascending".into(),
                ));
            }
        }
        if self.delta_grid.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Argument(
                "delta grid entries must be positive".into(),
            ));
        }
        if self.eta_grid_size == 0 {
            return Err(Error::Argument("eta grid size must be positive".into()));
        }
        if let DirectionSource::Provided(dirs) = &self.direction_source {
            if dirs.len() < self.n_q {
                return Err(Error::Argument(format!(
                    "{} provided directions for {} queries",
                    dirs.len(),
                    self.n_q
                )));
            }
        }
        Ok(())
    }
}

/// One sweep observation: a (query, delta) cell. Numeric fields are
/// `None` when the corresponding stage failed for this cell; the row
/// itself is always present.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub dataset: String,
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Index of the query point within the working sample.
    pub query_index: usize,
    pub delta: f64,
    pub y: Option<f64>,
    pub x: Option<f64>,
    pub theta: Option<f64>,
    pub direction_class: Option<DirectionClass>,
    pub f_b_y: Option<f64>,
    pub f_b_delta_x: Option<f64>,
    pub lid_estimate: Option<f64>,
    pub lower_mean: Option<f64>,
    pub upper_mean: Option<f64>,
    pub n_feasible_eta: usize,
    /// Feasible etas whose bounds were excluded from the means as
    /// numerically unusable.
    pub instability_count: usize,
}

// Stream tags for deriving independent RNG streams from the master seed.
const STREAM_SUBSAMPLE: u64 = 1;
const STREAM_QUERIES: u64 = 2;
const STREAM_TRAIN: u64 = 3;
const STREAM_DIRECTIONS: u64 = 0x100;

/// splitmix64 of seed xor tag: cheap, well-mixed stream derivation.
fn stream_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws `n_q` distinct indices from 0..n, returned ascending.
fn pick_queries(n: usize, n_q: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..n_q {
        let j = rand::Rng::gen_range(&mut rng, i..n);
        idx.swap(i, j);
    }
    let mut picked: Vec<usize> = idx.into_iter().take(n_q).collect();
    picked.sort_unstable();
    picked
}

/// The working sample a sweep with this seed would operate on: the
/// seeded subsample, or the dataset itself when no size is given.
pub fn working_sample(data: &Dataset, size: Option<usize>, seed: u64) -> Result<Dataset> {
    match size {
        Some(n) => subsample(data, n, stream_seed(seed, STREAM_SUBSAMPLE)),
        None => Ok(data.clone()),
    }
}

/// The query indices a sweep with this seed would visit, ascending.
/// Exposed so externally prepared per-query artifacts (direction files)
/// can line up with sweep rows.
pub fn select_queries(n: usize, n_q: usize, seed: u64) -> Result<Vec<usize>> {
    if n_q == 0 || n_q > n {
        return Err(Error::Argument(format!(
            "query count {n_q} must be in 1..={n}"
        )));
    }
    Ok(pick_queries(n, n_q, stream_seed(seed, STREAM_QUERIES)))
}

fn random_unit_direction(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn normalize_provided(dir: &[f64], dim: usize, qi: usize) -> Result<Vec<f64>> {
    if dir.len() != dim {
        return Err(Error::Argument(format!(
            "provided direction {qi} has dimension {}, expected {dim}",
            dir.len()
        )));
    }
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Argument(format!(
            "provided direction {qi} has norm {norm}, expected 1 within 1e-6"
        )));
    }
    Ok(dir.iter().map(|v| v / norm).collect())
}

/// Per-query state shared across the delta grid.
struct QueryContext {
    query_index: usize,
    direction: Option<Vec<f64>>,
    reference: Option<Vec<f64>>,
    x: Option<f64>,
}

fn build_row(
    sample: &Dataset,
    config: &ExperimentConfig,
    ctx: &QueryContext,
    delta: f64,
) -> SweepRow {
    let mut row = SweepRow {
        dataset: sample.name().to_string(),
        n: sample.len(),
        k: config.k,
        seed: config.seed,
        query_index: ctx.query_index,
        delta,
        y: None,
        x: ctx.x,
        theta: None,
        direction_class: None,
        f_b_y: None,
        f_b_delta_x: None,
        lid_estimate: None,
        lower_mean: None,
        upper_mean: None,
        n_feasible_eta: 0,
        instability_count: 0,
    };
    let (direction, reference) = match (&ctx.direction, &ctx.reference) {
        (Some(d), Some(c)) => (d, c),
        _ => return row,
    };
    let a = sample.point(ctx.query_index);
    let triple = match make_triple(a, direction, delta, reference) {
        Ok(t) => t,
        Err(_) => return row,
    };
    row.y = Some(triple.y());
    row.x = Some(triple.x());
    row.theta = Some(triple.theta());
    row.direction_class = Some(triple.direction_class());

    if let Ok(neighbors) = knn(sample, triple.b(), config.k, None) {
        if let Ok(est) = mle_lid(&neighbors) {
            row.lid_estimate = Some(est.value);
        }
    }
    let cdf = match all_distances(sample, triple.b(), None).and_then(|d| DistanceCdf::fit(&d)) {
        Ok(cdf) => cdf,
        Err(_) => return row,
    };
    row.f_b_y = cdf.eval(triple.y()).ok();
    row.f_b_delta_x = cdf.eval(triple.delta_x()).ok();

    let proxy = match row.lid_estimate {
        Some(v) if v > 0.0 => v,
        _ => return row,
    };
    let grid = match eta_grid(&triple, proxy, GridVariant::General, config.eta_grid_size) {
        Ok(g) => g,
        Err(_) => return row,
    };
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for f in grid.iter().filter(|f| f.feasible) {
        row.n_feasible_eta += 1;
        match lid_bounds(&triple, &cdf, f.eta) {
            Ok(b) if !b.flags.instability && !b.flags.sign_mismatch => {
                lowers.push(b.lower);
                uppers.push(b.upper);
            }
            _ => row.instability_count += 1,
        }
    }
    if !lowers.is_empty() {
        row.lower_mean = Some(kahan_sum(lowers.iter().copied()) / lowers.len() as f64);
        row.upper_mean = Some(kahan_sum(uppers.iter().copied()) / uppers.len() as f64);
    }
    row
}

/// Runs the sweep over `n_q` queries and the delta grid, one row per
/// (query, delta) in that order. Deterministic for a fixed config.
pub fn run_sweep(data: &Dataset, config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let sample = working_sample(data, config.subsample, config.seed)?;
    config.validate(sample.len())?;
    let queries = select_queries(sample.len(), config.n_q, config.seed)?;

    let model = match &config.direction_source {
        DirectionSource::Surrogate {
            epochs,
            learning_rate,
        } => Some(train_surrogate(
            &sample,
            *epochs,
            *learning_rate,
            stream_seed(config.seed, STREAM_TRAIN),
        )?),
        _ => None,
    };

    let contexts: Vec<QueryContext> = queries
        .iter()
        .enumerate()
        .map(|(qi, &query_index)| {
            let a = sample.point(query_index);
            let direction = match &config.direction_source {
                DirectionSource::Surrogate { .. } => {
                    let label = sample.label(query_index).unwrap_or(0);
                    model.as_ref().unwrap().attack_direction(a, label).ok()
                }
                DirectionSource::Random => Some(random_unit_direction(
                    sample.dim(),
                    stream_seed(config.seed, STREAM_DIRECTIONS + qi as u64),
                )),
                DirectionSource::Provided(dirs) => {
                    Some(normalize_provided(&dirs[qi], sample.dim(), qi)?)
                }
            };
            // Reference: the neighbor of rank k/2 (rank 1 = nearest).
            let (reference, x) = match knn(&sample, a, config.k, Some(query_index)) {
                Ok(nb) => {
                    let pos = config.k / 2 - 1;
                    let c = sample.point(nb.indices()[pos]).to_vec();
                    let x = nb.distances()[pos];
                    if x > 0.0 {
                        (Some(c), Some(x))
                    } else {
                        (None, None)
                    }
                }
                Err(_) => (None, None),
            };
            Ok(QueryContext {
                query_index,
                direction,
                reference,
                x,
            })
        })
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = (0..contexts.len())
        .flat_map(|qi| (0..config.delta_grid.len()).map(move |di| (qi, di)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(qi, di)| build_row(&sample, config, &contexts[qi], config.delta_grid[di]))
        .collect();
    Ok(rows)
}

/// Fractions of classified rows perturbed toward, away from, and on the
/// boundary around the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionStats {
    pub toward: f64,
    pub away: f64,
    pub boundary: f64,
    /// Number of rows carrying a direction class.
    pub n: usize,
}

pub fn direction_stats(rows: &[SweepRow]) -> Result<DirectionStats> {
    let mut toward = 0usize;
    let mut away = 0usize;
    let mut boundary = 0usize;
    for row in rows {
        match row.direction_class {
            Some(DirectionClass::Toward) => toward += 1,
            Some(DirectionClass::Away) => away += 1,
            Some(DirectionClass::Boundary) => boundary += 1,
            None => {}
        }
    }
    let n = toward + away + boundary;
    if n == 0 {
        return Err(Error::Argument("no classified rows to summarize".into()));
    }
    Ok(DirectionStats {
        toward: toward as f64 / n as f64,
        away: away as f64 / n as f64,
        boundary: boundary as f64 / n as f64,
        n,
    })
}

pub const SWEEP_HEADER: [&str; 17] = [
    "dataset",
    "n",
    "k",
    "seed",
    "query_index",
    "delta",
    "y",
    "x",
    "theta",
    "direction_class",
    "f_b_y",
    "f_b_delta_x",
    "lid_estimate",
    "lower_mean",
    "upper_mean",
    "n_feasible_eta",
    "instability_count",
];

fn opt_field(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes rows in the pinned column order, header first, empty fields
/// for absent values.
pub fn emit_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    writer
        .write_record(SWEEP_HEADER)
        .map_err(|e| Error::format(path, e.to_string()))?;
    for row in rows {
        let record = [
            row.dataset.clone(),
            row.n.to_string(),
            row.k.to_string(),
            row.seed.to_string(),
            row.query_index.to_string(),
            row.delta.to_string(),
            opt_field(row.y),
            opt_field(row.x),
            opt_field(row.theta),
            row.direction_class
                .map(|c| c.as_str().to_string())
                .unwrap_or_default(),
            opt_field(row.f_b_y),
            opt_field(row.f_b_delta_x),
            opt_field(row.lid_estimate),
            opt_field(row.lower_mean),
            opt_field(row.upper_mean),
            row.n_feasible_eta.to_string(),
            row.instability_count.to_string(),
        ];
        writer
            .write_record(&record)
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn parse_opt(path: &Path, row: usize, field: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|_| Error::format(path, format!("row {row}: non-numeric field {field:?}")))
}

fn parse_num<T: std::str::FromStr>(path: &Path, row: usize, field: &str) -> Result<T> {
    field
        .parse::<T>()
        .map_err(|_| Error::format(path, format!("row {row}: bad field {field:?}")))
}

/// Reads a file written by [`emit_csv`] back into rows.
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, format!("row {i}: {e}")))?;
        if i == 0 {
            if record.iter().ne(SWEEP_HEADER) {
                return Err(Error::format(path, "unexpected header row"));
            }
            continue;
        }
        if record.len() != SWEEP_HEADER.len() {
            return Err(Error::format(
                path,
                format!(
                    "row {i} has {} fields, expected {}",
                    record.len(),
                    SWEEP_HEADER.len()
                ),
            ));
        }
        let class = match &record[9] {
            "" => None,
            s => Some(s.parse::<DirectionClass>()?),
        };
        rows.push(SweepRow {
            dataset: record[0].to_string(),
            n: parse_num(path, i, &record[1])?,
            k: parse_num(path, i, &record[2])?,
            seed: parse_num(path, i, &record[3])?,
            query_index: parse_num(path, i, &record[4])?,
            delta: parse_num(path, i, &record[5])?,
            y: parse_opt(path, i, &record[6])?,
            x: parse_opt(path, i, &record[7])?,
            theta: parse_opt(path, i, &record[8])?,
            direction_class: class,
            f_b_y: parse_opt(path, i, &record[10])?,
            f_b_delta_x: parse_opt(path, i, &record[11])?,
            lid_estimate: parse_opt(path, i, &record[12])?,
            lower_mean: parse_opt(path, i, &record[13])?,
            upper_mean: parse_opt(path, i, &record[14])?,
            n_feasible_eta: parse_num(path, i, &record[15])?,
            instability_count: parse_num(path, i, &record[16])?,
        });
    }
    Ok(rows)
}

/// Per-delta aggregate of a row set: means and standard errors of the
/// lower bound, the LID estimate, and the upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotPoint {
    pub delta: f64,
    pub n_rows: usize,
    pub mean_lower: Option<f64>,
    pub se_lower: Option<f64>,
    pub mean_lid: Option<f64>,
    pub se_lid: Option<f64>,
    pub mean_upper: Option<f64>,
    pub se_upper: Option<f64>,
}

/// Groups rows by delta (ascending) and aggregates each column over the
/// rows where it is present.
pub fn aggregate_by_delta(rows: &[SweepRow]) -> Vec<PlotPoint> {
    // Positive f64 bit patterns sort like the numbers themselves.
    let mut groups: BTreeMap<u64, Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        groups.entry(row.delta.to_bits()).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|(bits, group)| {
            let collect = |get: fn(&SweepRow) -> Option<f64>| -> Vec<f64> {
                group.iter().filter_map(|r| get(r)).collect()
            };
            let lowers = collect(|r| r.lower_mean);
            let lids = collect(|r| r.lid_estimate);
            let uppers = collect(|r| r.upper_mean);
            PlotPoint {
                delta: f64::from_bits(bits),
                n_rows: group.len(),
                mean_lower: mean(&lowers),
                se_lower: standard_error(&lowers),
                mean_lid: mean(&lids),
                se_lid: standard_error(&lids),
                mean_upper: mean(&uppers),
                se_upper: standard_error(&uppers),
            }
        })
        .collect()
}

pub const PLOT_HEADER: [&str; 8] = [
    "delta",
    "n_rows",
    "mean_lower",
    "se_lower",
    "mean_lid",
    "se_lid",
    "mean_upper",
    "se_upper",
];

/// Writes the per-delta aggregation, one row per delta, ascending.
pub fn emit_plotdata(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    writer
        .write_record(PLOT_HEADER)
        .map_err(|e| Error::format(path, e.to_string()))?;
    for p in aggregate_by_delta(rows) {
        let record = [
            p.delta.to_string(),
            p.n_rows.to_string(),
            opt_field(p.mean_lower),
            opt_field(p.se_lower),
            opt_field(p.mean_lid),
            opt_field(p.se_lid),
            opt_field(p.mean_upper),
            opt_field(p.se_upper),
        ];
        writer
            .write_record(&record)
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
