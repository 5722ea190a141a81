//! Perturbation geometry and gradient-based attack directions.
//!
//! # Geometry
//!
//! A benign point `a` is perturbed along a unit `direction` into
//! `b = a + delta * x * direction`, where `x = |a - c|` is the distance to
//! a fixed reference point `c`. With `y = |b - c|` and `theta` the angle
//! between the perturbation direction and `c - a`, the side lengths obey
//! the law of cosines
//!
//! ```text
//! y^2 = delta^2 x^2 + x^2 - 2 delta x^2 cos(theta)
//! ```
//!
//! so whether the perturbation moved the point toward or away from the
//! reference is decided by delta against 2 cos(theta):
//!
//! ```text
//! away   (y > x)  iff  delta > 2 cos(theta)
//! toward (y < x)  iff  delta < 2 cos(theta)   (forces |theta| < pi/2)
//! ```
//!
//! # Attack directions
//!
//! A softmax (multinomial logistic) surrogate classifier supplies loss
//! gradients; the attack direction is the unit-normalized sign of the
//! input gradient of the cross-entropy loss, the strongest first-order
//! loss increase under a max-norm budget.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metric::euclidean;

/// Relative slack below which |y - x| is treated as exactly on the
/// toward/away boundary.
const BOUNDARY_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionClass {
    Toward,
    Away,
    Boundary,
}

impl DirectionClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DirectionClass::Toward => "toward",
            DirectionClass::Away => "away",
            DirectionClass::Boundary => "boundary",
        }
    }
}

impl fmt::Display for DirectionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DirectionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toward" => Ok(DirectionClass::Toward),
            "away" => Ok(DirectionClass::Away),
            "boundary" => Ok(DirectionClass::Boundary),
            other => Err(Error::Argument(format!(
                "unknown direction class {other:?}"
            ))),
        }
    }
}

/// A benign point, its perturbed image, and a reference point, together
/// with the derived scalars the bound machinery consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationTriple {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    x: f64,
    y: f64,
    delta: f64,
    theta: f64,
}

impl PerturbationTriple {
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Distance from the benign point to the reference.
    pub fn x(&self) -> f64 {
        self.x
    }

    /// Distance from the perturbed point to the reference.
    pub fn y(&self) -> f64 {
        self.y
    }

    /// Perturbation magnitude as a fraction of x.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Angle in radians between the perturbation direction and c - a.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Distance from the perturbed point back to the benign point.
    pub fn delta_x(&self) -> f64 {
        self.delta * self.x
    }

    /// Classifies the perturbation by the (delta, theta) rule, with a
    /// relative band around y = x reported as `Boundary`. Matches the
    /// direct comparison of y against x outside the band.
    pub fn direction_class(&self) -> DirectionClass {
        if (self.y - self.x).abs() <= BOUNDARY_BAND * self.x {
            return DirectionClass::Boundary;
        }
        if self.delta > 2.0 * self.theta.cos() {
            DirectionClass::Away
        } else {
            DirectionClass::Toward
        }
    }
}

/// Builds the perturbation triple `b = a + delta * x * direction`.
///
/// `direction` must be a unit vector to within 1e-9; `a` and `c` must be
/// distinct points of the same dimension; `delta` must be positive.
pub fn make_triple(
    a: &[f64],
    direction: &[f64],
    delta: f64,
    c: &[f64],
) -> Result<PerturbationTriple> {
    if a.len() != direction.len() || a.len() != c.len() {
        return Err(Error::Argument(format!(
            "dimension mismatch: a = {}, direction = {}, c = {}",
            a.len(),
            direction.len(),
            c.len()
        )));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Argument(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    let norm = euclidean(direction, &vec![0.0; direction.len()])?;
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "direction must be a unit vector, norm = {norm}"
        )));
    }
    let x = euclidean(a, c)?;
    if x == 0.0 {
        return Err(Error::DegenerateGeometry(
            "reference point coincides with the benign point".into(),
        ));
    }
    let step = delta * x;
    let b: Vec<f64> = a
        .iter()
        .zip(direction)
        .map(|(ai, di)| ai + step * di)
        .collect();
    let y = euclidean(&b, c)?;
    if y == 0.0 {
        return Err(Error::DegenerateGeometry(
            "perturbed point coincides with the reference".into(),
        ));
    }
    // cos(theta) = direction . (c - a) / x, clamped against rounding.
    let dot: f64 = direction
        .iter()
        .zip(a.iter().zip(c))
        .map(|(d, (ai, ci))| d * (ci - ai))
        .sum();
    let cos_theta = (dot / x).clamp(-1.0, 1.0);
    Ok(PerturbationTriple {
        a: a.to_vec(),
        b,
        c: c.to_vec(),
        x,
        y,
        delta,
        theta: cos_theta.acos(),
    })
}

/// Builds a triple directly from the scalar geometry (x, delta, theta),
/// embedding the three points in the plane: `a` at the origin, `c` on the
/// first axis, and the perturbation direction at angle theta to it. Useful
/// for studying the bounds on analytic CDFs where only the scalars matter.
pub fn from_geometry(x: f64, delta: f64, theta: f64) -> Result<PerturbationTriple> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Argument(format!(
            "x must be positive and finite, got {x}"
        )));
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::Argument(format!(
            "theta must lie in [0, pi], got {theta}"
        )));
    }
    let a = vec![0.0, 0.0];
    let c = vec![x, 0.0];
    let direction = vec![theta.cos(), theta.sin()];
    make_triple(&a, &direction, delta, &c)
}

/// Softmax (multinomial logistic) surrogate classifier with dense
/// per-class weight rows and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    weights: Vec<f64>, // n_classes rows of dim columns
    bias: Vec<f64>,
    n_classes: usize,
    dim: usize,
}

const MINI_BATCH: usize = 128;

impl AttackModel {
    pub fn from_weights(weights: Vec<f64>, bias: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || weights.is_empty() || weights.len() % dim != 0 {
            return Err(Error::Argument(format!(
                "weight buffer length {} is not a positive multiple of dim {dim}",
                weights.len()
            )));
        }
        let n_classes = weights.len() / dim;
        if n_classes < 2 {
            return Err(Error::Argument("need at least 2 classes".into()));
        }
        if bias.len() != n_classes {
            return Err(Error::Argument(format!(
                "bias length {} does not match class count {n_classes}",
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Argument("non-finite model parameter".into()));
        }
        Ok(AttackModel {
            weights,
            bias,
            n_classes,
            dim,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn class_row(&self, c: usize) -> &[f64] {
        &self.weights[c * self.dim..(c + 1) * self.dim]
    }

    fn logits(&self, point: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                self.bias[c]
                    + self
                        .class_row(c)
                        .iter()
                        .zip(point)
                        .map(|(w, x)| w * x)
                        .sum::<f64>()
            })
            .collect()
    }

    fn softmax(logits: &[f64]) -> Vec<f64> {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / sum).collect()
    }

    pub fn predict(&self, point: &[f64]) -> usize {
        let logits = self.logits(point);
        let mut best = 0;
        for (c, z) in logits.iter().enumerate() {
            if *z > logits[best] {
                best = c;
            }
        }
        best
    }

    /// Cross-entropy loss of the true label at `point`.
    pub fn loss(&self, point: &[f64], label: u32) -> Result<f64> {
        self.check_input(point, label)?;
        let logits = self.logits(point);
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        Ok(lse - logits[label as usize])
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        let labels = data.labels().ok_or(Error::MissingLabels)?;
        let hits = data
            .iter_points()
            .zip(labels)
            .filter(|(p, &l)| self.predict(p) == l as usize)
            .count();
        Ok(hits as f64 / data.len() as f64)
    }

    fn check_input(&self, point: &[f64], label: u32) -> Result<()> {
        if point.len() != self.dim {
            return Err(Error::Argument(format!(
                "point dimension {} does not match model dimension {}",
                point.len(),
                self.dim
            )));
        }
        if label as usize >= self.n_classes {
            return Err(Error::Argument(format!(
                "label {label} out of range for {} classes",
                self.n_classes
            )));
        }
        Ok(())
    }

    /// Unit-normalized sign of the input gradient of the loss: the
    /// direction that maximally increases the surrogate's cross-entropy
    /// at `point` under a max-norm step.
    pub fn attack_direction(&self, point: &[f64], label: u32) -> Result<Vec<f64>> {
        self.check_input(point, label)?;
        let probs = Self::softmax(&self.logits(point));
        // d loss / d x = sum_c (p_c - [c == label]) * w_c
        let mut grad = vec![0.0; self.dim];
        for c in 0..self.n_classes {
            let coeff = probs[c] - f64::from(c as u32 == label);
            for (g, w) in grad.iter_mut().zip(self.class_row(c)) {
                *g += coeff * w;
            }
        }
        let mut dir: Vec<f64> = grad
            .iter()
            .map(|g| g.signum() * f64::from(*g != 0.0))
            .collect();
        let nonzero = dir.iter().filter(|v| **v != 0.0).count();
        if nonzero == 0 {
            return Err(Error::ZeroGradient);
        }
        let norm = (nonzero as f64).sqrt();
        dir.iter_mut().for_each(|v| *v /= norm);
        Ok(dir)
    }
}

/// Trains a softmax surrogate by mini-batch gradient descent on the
/// cross-entropy loss (batch size 128, zero init). Deterministic for a
/// fixed seed: the only randomness is the per-epoch shuffle, and gradient
/// accumulation is sequential.
pub fn train_surrogate(
    data: &Dataset,
    epochs: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<AttackModel> {
    let labels = data.labels().ok_or(Error::MissingLabels)?;
    let n_classes = data.n_classes().unwrap_or(0);
    if n_classes < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 classes to train, got {n_classes}"
        )));
    }
    if epochs == 0 {
        return Err(Error::Argument("epochs must be positive".into()));
    }
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        return Err(Error::Argument(format!(
            "learning rate must be positive and finite, got {learning_rate}"
        )));
    }
    let dim = data.dim();
    let n = data.len();
    let mut weights = vec![0.0; n_classes * dim];
    let mut bias = vec![0.0; n_classes];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut grad_w = vec![0.0; n_classes * dim];
    let mut grad_b = vec![0.0; n_classes];
    for _epoch in 0..epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(MINI_BATCH) {
            grad_w.iter_mut().for_each(|g| *g = 0.0);
            grad_b.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let point = data.point(i);
                let label = labels[i] as usize;
                let logits: Vec<f64> = (0..n_classes)
                    .map(|c| {
                        bias[c]
                            + weights[c * dim..(c + 1) * dim]
                                .iter()
                                .zip(point)
                                .map(|(w, x)| w * x)
                                .sum::<f64>()
                    })
                    .collect();
                let probs = AttackModel::softmax(&logits);
                for c in 0..n_classes {
                    let coeff = probs[c] - f64::from(c == label);
                    grad_b[c] += coeff;
                    let row = &mut grad_w[c * dim..(c + 1) * dim];
                    for (g, x) in row.iter_mut().zip(point) {
                        *g += coeff * x;
                    }
                }
            }
            let scale = learning_rate / batch.len() as f64;
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= scale * g;
            }
            for (b, g) in bias.iter_mut().zip(&grad_b) {
                *b -= scale * g;
            }
        }
    }
    AttackModel::from_weights(weights, bias, dim)
}

/// Reads attack directions from headerless CSV, one unit vector per row.
/// Rows must have exactly `dim` finite fields with norm within 1e-6 of 1;
/// each is renormalized to exact unit length on load.
pub fn read_directions_csv(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, format!("row {row}: {e}")))?;
        if record.len() != dim {
            return Err(Error::format(
                path,
                format!("row {row} has {} fields, expected {dim}", record.len()),
            ));
        }
        let mut dir = Vec::with_capacity(dim);
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::format(
                    path,
                    format!("row {row}, column {col}: non-numeric {field:?}"),
                )
            })?;
            if !v.is_finite() {
                return Err(Error::format(
                    path,
                    format!("row {row}: non-finite component"),
                ));
            }
            dir.push(v);
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::format(
                path,
                format!("row {row}: direction norm {norm} not within 1e-6 of 1"),
            ));
        }
        dir.iter_mut().for_each(|v| *v /= norm);
        out.push(dir);
    }
    if out.is_empty() {
        return Err(Error::format(path, "no direction rows"));
    }
    Ok(out)
}

/// Writes attack directions as headerless CSV, the inverse of
/// [`read_directions_csv`].
pub fn write_directions_csv(path: &Path, directions: &[Vec<f64>]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    for dir in directions {
        let fields: Vec<String> = dir.iter().map(|v| format!("{v}")).collect();
        writer
            .write_record(&fields)
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
