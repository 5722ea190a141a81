//! Local intrinsic dimensionality (LID) estimation.
//!
//! # Background
//!
//! Let F be the cumulative distribution function of distances from a fixed
//! point to the rest of the data. The intrinsic dimensionality of F at
//! radius r is the elasticity of F:
//!
//! ```text
//! ID_F(r) = r * F'(r) / F(r)
//! ```
//!
//! and the LID at the point is the limit of ID_F(r) as r -> 0+. For a
//! power-law CDF F(r) = (r/w)^m the elasticity is exactly m at every
//! radius, which is the sense in which LID generalizes dimension.
//!
//! Two finite-sample views are provided:
//!
//! ```text
//! expansion_dimension:  m = ln(v2/v1) / ln(r2/r1)
//! mle_lid:              lid = -( (1/k) * sum_i ln(r_i / r_max) )^-1
//! ```
//!
//! where the MLE sum runs over all k neighbor distances including the
//! largest (whose term is zero).
//!
//! The representation factor G ties the CDF at two radii to the LID limit:
//!
//! ```text
//! F(r) / F(w) = (r/w)^lid0 * G(r, w),
//! G(r, w) = exp( integral_r^w (lid0 - ID_F(t)) / t dt )
//! ```
//!
//! For smooth F with ID continuous at zero, G -> 1 as w -> 0+ with r/w
//! bounded, so small neighborhoods look exactly power-law.

use crate::error::{Error, Result};
use crate::metric::NeighborList;

/// An evaluable distance CDF.
///
/// `density` defaults to a central finite difference with relative step
/// 1e-5, adequate for smooth CDFs queried at r > 0; implementors with a
/// closed-form derivative should override it.
pub trait Cdf {
    fn value(&self, r: f64) -> f64;

    fn density(&self, r: f64) -> f64 {
        let h = 1e-5 * r;
        (self.value(r + h) - self.value(r - h)) / (2.0 * h)
    }
}

/// Power-law CDF F(r) = (r/w)^m on [0, w], the exact local model for
/// uniform data of dimension m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawCdf {
    exponent: f64,
    support: f64,
}

impl PowerLawCdf {
    pub fn new(exponent: f64, support: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::Argument(format!(
                "power-law exponent must be positive and finite, got {exponent}"
            )));
        }
        if !(support > 0.0 && support.is_finite()) {
            return Err(Error::Argument(format!(
                "power-law support must be positive and finite, got {support}"
            )));
        }
        Ok(PowerLawCdf { exponent, support })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn support(&self) -> f64 {
        self.support
    }
}

impl Cdf for PowerLawCdf {
    fn value(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else if r >= self.support {
            1.0
        } else {
            (r / self.support).powf(self.exponent)
        }
    }

    fn density(&self, r: f64) -> f64 {
        if r <= 0.0 || r > self.support {
            0.0
        } else {
            // m * F(r) / r, exact for the power law.
            self.exponent * self.value(r) / r
        }
    }
}

/// A maximum-likelihood LID estimate together with the neighborhood that
/// produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidEstimate {
    pub value: f64,
    pub k: usize,
    pub r_max: f64,
}

/// Two-ball expansion dimension: the exponent relating volume growth to
/// radius growth. Returns 0 when the counts are equal.
pub fn expansion_dimension(v1: f64, v2: f64, r1: f64, r2: f64) -> Result<f64> {
    for (name, v) in [("v1", v1), ("v2", v2), ("r1", r1), ("r2", r2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Argument(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    if r1 == r2 {
        return Err(Error::Argument("radii must differ".into()));
    }
    Ok((v2 / v1).ln() / (r2 / r1).ln())
}

/// Maximum-likelihood LID estimate from a sorted neighbor list:
///
/// ```text
/// lid = -( (1/k) * sum_{i=1..k} ln(r_i / r_max) )^-1
/// ```
///
/// The i = k term is included (it contributes zero). Scale-invariant:
/// rescaling all distances by a constant leaves the estimate unchanged up
/// to rounding.
pub fn mle_lid(neighbors: &NeighborList) -> Result<LidEstimate> {
    let k = neighbors.k();
    if k < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 neighbors, got {k}"
        )));
    }
    let r_max = neighbors.r_max();
    let mut sum = 0.0;
    for &r in neighbors.distances() {
        if r <= 0.0 {
            return Err(Error::DegenerateDistance(
                "zero neighbor distance in MLE neighborhood".into(),
            ));
        }
        sum += (r / r_max).ln();
    }
    if sum == 0.0 {
        return Err(Error::InfiniteEstimate);
    }
    Ok(LidEstimate {
        value: -(k as f64) / sum,
        k,
        r_max,
    })
}

/// Elasticity ID_F(r) = r F'(r) / F(r) of a CDF at radius r > 0.
pub fn id_at_radius<C: Cdf + ?Sized>(cdf: &C, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "radius must be positive and finite, got {r}"
        )));
    }
    let f = cdf.value(r);
    if f <= 0.0 {
        return Err(Error::Domain(format!("CDF is not positive at r = {r}")));
    }
    let id = r * cdf.density(r) / f;
    if !id.is_finite() {
        return Err(Error::Numeric(format!("non-finite elasticity at r = {r}")));
    }
    Ok(id)
}

/// Representation factor
///
/// ```text
/// G(r, w) = exp( integral_r^w (lid_at_zero - ID_F(t)) / t dt )
/// ```
///
/// evaluated with adaptive Simpson quadrature at relative tolerance 1e-8.
/// Exactly 1 when r = w, and identically 1 on a power-law CDF with
/// `lid_at_zero` equal to its exponent.
pub fn representation_factor<C: Cdf + ?Sized>(
    cdf: &C,
    r: f64,
    w: f64,
    lid_at_zero: f64,
) -> Result<f64> {
    for (name, v) in [("r", r), ("w", w)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    if !lid_at_zero.is_finite() {
        return Err(Error::Argument("lid_at_zero must be finite".into()));
    }
    if r == w {
        return Ok(1.0);
    }
    let integrand = |t: f64| -> Result<f64> { Ok((lid_at_zero - id_at_radius(cdf, t)?) / t) };
    let (lo, hi, sign) = if r < w { (r, w, 1.0) } else { (w, r, -1.0) };
    let integral = adaptive_simpson(&integrand, lo, hi, 1e-8)?;
    Ok((sign * integral).exp())
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson quadrature, iterative with an explicit segment stack.
/// A global evaluation budget bounds the total work, so pathological
/// integrands fail fast instead of subdividing forever.
fn adaptive_simpson<F>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    const MAX_EVALS: usize = 200_000;
    const MAX_DEPTH: u32 = 48;

    let mut evals = 0usize;
    let mut eval = |t: f64| -> Result<f64> {
        evals += 1;
        if evals > MAX_EVALS {
            return Err(Error::Numeric(
                "quadrature evaluation budget exhausted without convergence".into(),
            ));
        }
        let v = f(t)?;
        if !v.is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand at t = {t}")));
        }
        Ok(v)
    };

    struct Segment {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    }

    let fa = eval(a)?;
    let fb = eval(b)?;
    let mid = 0.5 * (a + b);
    let fm = eval(mid)?;
    let whole = simpson_rule(a, b, fa, fm, fb);
    // Relative tolerance with an absolute floor: integrals at rounding-noise
    // scale (e.g. an identically-zero integrand evaluated in floats) must
    // terminate instead of chasing a relative target they can never meet.
    let tol = rel_tol * whole.abs().max(1e-9);

    let mut total = 0.0;
    let mut stack = vec![Segment {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        depth: MAX_DEPTH,
    }];
    while let Some(seg) = stack.pop() {
        let m = 0.5 * (seg.a + seg.b);
        let lm = 0.5 * (seg.a + m);
        let rm = 0.5 * (m + seg.b);
        let flm = eval(lm)?;
        let frm = eval(rm)?;
        let left = simpson_rule(seg.a, m, seg.fa, flm, seg.fm);
        let right = simpson_rule(m, seg.b, seg.fm, frm, seg.fb);
        let delta = left + right - seg.whole;
        if delta.abs() <= 15.0 * seg.tol {
            total += left + right + delta / 15.0;
            continue;
        }
        if seg.depth == 0 {
            return Err(Error::Numeric(format!(
                "quadrature did not converge on [{}, {}]",
                seg.a, seg.b
            )));
        }
        stack.push(Segment {
            a: seg.a,
            b: m,
            fa: seg.fa,
            fm: flm,
            fb: seg.fm,
            whole: left,
            tol: 0.5 * seg.tol,
            depth: seg.depth - 1,
        });
        stack.push(Segment {
            a: m,
            b: seg.b,
            fa: seg.fm,
            fm: frm,
            fb: seg.fb,
            whole: right,
            tol: 0.5 * seg.tol,
            depth: seg.depth - 1,
        });
    }
    Ok(total)
}
