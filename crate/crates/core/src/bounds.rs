//! Sandwich bounds on the local intrinsic dimensionality of a perturbed
//! point.
//!
//! Writing F_b for the distance CDF centered at the perturbed point b,
//! rho = y/(delta x) for the ratio of its two anchor distances, and eta
//! for a small slack absorbing the non-power-law part of F_b, the general
//! bounds are
//!
//! ```text
//! ln(F_b(y) / F_b(delta x))          ln(F_b(y) / F_b(delta x))
//! -------------------------  <= LID(b) <=  ------------------------
//!       ln(rho + eta)                         ln(rho - eta)
//! ```
//!
//! The slack must satisfy 0 < eta < min(cap_ratio, cap_lid) with
//!
//! ```text
//! cap_ratio = rho - 1
//! cap_lid   = LID(b) * ln(phi) / |ln(1/rho)|
//! phi       = min{ (y + delta x eta) / y,  y / (y - delta x eta) }
//! ```
//!
//! cap_lid references the unknown LID(b) itself; a proxy estimate stands
//! in, and the cap is evaluated self-consistently at each candidate eta.
//!
//! The directional variants substitute the extreme of rho over all
//! perturbation angles at fixed delta, which is 1/delta: away-perturbed
//! points (y > x) have rho > 1/delta, so replacing rho by 1/delta yields
//! the greatest such bounds; toward-perturbed points (y < x) have
//! rho < 1/delta and the substitution yields the least ones. These
//! require delta < 1 and eta < 1/delta - 1.

use crate::error::{Error, Result};
use crate::lid::Cdf;
use crate::perturb::{DirectionClass, PerturbationTriple};

/// Lower end of the eta search range; below this the bounds are
/// numerically indistinguishable from the raw two-point ratio.
const ETA_FLOOR: f64 = 1e-6;

/// Denominators closer to zero than this flag the result unstable.
const INSTABILITY_EPS: f64 = 1e-12;

/// Representation-factor tolerance phi controlling the eta cap.
///
/// Requires `delta_x * eta < y`; the first branch is the binding one for
/// all valid inputs but both are evaluated as written.
pub fn phi(y: f64, delta_x: f64, eta: f64) -> Result<f64> {
    if !(y > 0.0 && delta_x > 0.0 && eta > 0.0) || !y.is_finite() || !delta_x.is_finite() {
        return Err(Error::Argument(format!(
            "phi needs positive y, delta_x, eta; got y = {y}, delta_x = {delta_x}, eta = {eta}"
        )));
    }
    let step = delta_x * eta;
    if step >= y {
        return Err(Error::InfeasibleEta(format!(
            "delta_x * eta = {step} >= y = {y} leaves no room for the tolerance"
        )));
    }
    Ok(((y + step) / y).min(y / (y - step)))
}

/// The caps that bound a feasible eta from above (and, for the
/// directional variants, the interval it must also lie in).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaLimits {
    /// rho - 1, from requiring rho - eta > 1 room in the denominators.
    pub cap_ratio: f64,
    /// lid_proxy * ln(phi) / |ln(1/rho)|, evaluated at this eta's phi.
    pub cap_lid: f64,
    /// (1 - 1/delta, 1/delta - 1), present for the directional variants;
    /// empty when delta >= 1.
    pub directional: Option<(f64, f64)>,
}

/// One eta candidate with its tolerance and feasibility verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaFeasibility {
    pub eta: f64,
    pub phi: f64,
    pub feasible: bool,
    pub limits: EtaLimits,
}

/// Which eta constraints to test: the general bounds need only the caps;
/// the directional ones additionally confine eta to their interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridVariant {
    General,
    Directional,
}

/// Evaluates one eta candidate against the caps (self-consistently, with
/// phi taken at this eta) and, for the directional variant, the interval
/// (1 - 1/delta, 1/delta - 1).
pub fn eta_feasibility(
    triple: &PerturbationTriple,
    lid_proxy: f64,
    variant: GridVariant,
    eta: f64,
) -> Result<EtaFeasibility> {
    if !(lid_proxy > 0.0 && lid_proxy.is_finite()) {
        return Err(Error::Argument(format!(
            "lid proxy must be positive and finite, got {lid_proxy}"
        )));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Argument(format!(
            "eta must be positive and finite, got {eta}"
        )));
    }
    let y = triple.y();
    let delta_x = triple.delta_x();
    if y == delta_x {
        return Err(Error::DegenerateGeometry(
            "y equals delta x, the anchor distances carry no ratio information".into(),
        ));
    }
    let ratio = y / delta_x;
    let cap_ratio = ratio - 1.0;
    let tol = phi(y, delta_x, eta)?;
    let cap_lid = lid_proxy * tol.ln() / (delta_x / y).ln().abs();
    let directional = match variant {
        GridVariant::General => None,
        GridVariant::Directional => {
            let inv = 1.0 / triple.delta();
            Some((1.0 - inv, inv - 1.0))
        }
    };
    let mut feasible = eta < cap_ratio && eta < cap_lid;
    if let Some((lo, hi)) = directional {
        feasible = feasible && lo < eta && eta < hi;
    }
    Ok(EtaFeasibility {
        eta,
        phi: tol,
        feasible,
        limits: EtaLimits {
            cap_ratio,
            cap_lid,
            directional,
        },
    })
}

/// Builds `grid_size` log-spaced eta candidates strictly inside
/// (1e-6, cap_ratio) and tests each for feasibility.
///
/// A ratio y/(delta x) below 1 makes cap_ratio negative and the stated
/// range empty; the returned list is then empty, which callers treat as
/// "no feasible eta" rather than an error. Equal anchor distances are an
/// error: the bounds are undefined there.
pub fn eta_grid(
    triple: &PerturbationTriple,
    lid_proxy: f64,
    variant: GridVariant,
    grid_size: usize,
) -> Result<Vec<EtaFeasibility>> {
    if grid_size == 0 {
        return Err(Error::Argument("eta grid size must be positive".into()));
    }
    let y = triple.y();
    let delta_x = triple.delta_x();
    if y == delta_x {
        return Err(Error::DegenerateGeometry(
            "y equals delta x, the anchor distances carry no ratio information".into(),
        ));
    }
    let cap_ratio = y / delta_x - 1.0;
    if cap_ratio <= ETA_FLOOR {
        return Ok(Vec::new());
    }
    let lo = ETA_FLOOR.ln();
    let hi = cap_ratio.ln();
    let mut out = Vec::with_capacity(grid_size);
    for i in 0..grid_size {
        // Interior points only: both endpoints are excluded.
        let t = (i + 1) as f64 / (grid_size + 1) as f64;
        let eta = (lo + t * (hi - lo)).exp();
        out.push(eta_feasibility(triple, lid_proxy, variant, eta)?);
    }
    Ok(out)
}

/// Which bound family a result came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundVariant {
    /// Measured-ratio denominators ln(y/(delta x) +- eta).
    General,
    /// Angle-extreme denominators ln(1/delta +- eta), away case: the
    /// greatest lower and upper bounds over feasible angles.
    DirectionalAway,
    /// Angle-extreme denominators, toward case: the least such bounds.
    DirectionalToward,
}

impl BoundVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundVariant::General => "general",
            BoundVariant::DirectionalAway => "directional-away",
            BoundVariant::DirectionalToward => "directional-toward",
        }
    }
}

/// Quality flags carried alongside a bound instead of silently dropping
/// or erroring the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BoundFlags {
    /// A log denominator came within 1e-12 of zero; the bound magnitudes
    /// are meaningless.
    pub instability: bool,
    /// The numerator does not share its sign with both denominators, so
    /// the pair does not bracket in the stated order.
    pub sign_mismatch: bool,
    /// delta >= y/x, outside the stated validity range 0 < delta < y/x
    /// (binds only for toward perturbations).
    pub delta_constraint: bool,
}

/// Scalar geometry summary carried by each bound result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub x: f64,
    pub y: f64,
    pub delta: f64,
    pub theta: f64,
    pub delta_x: f64,
    pub ratio: f64,
    pub class: DirectionClass,
}

impl Geometry {
    fn of(triple: &PerturbationTriple) -> Self {
        Geometry {
            x: triple.x(),
            y: triple.y(),
            delta: triple.delta(),
            theta: triple.theta(),
            delta_x: triple.delta_x(),
            ratio: triple.y() / triple.delta_x(),
            class: triple.direction_class(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub variant: BoundVariant,
    pub eta: f64,
    /// ln(F_b(y) / F_b(delta x)), the shared numerator.
    pub ratio_log: f64,
    pub lower: f64,
    pub upper: f64,
    pub flags: BoundFlags,
    pub geometry: Geometry,
}

fn numerator<C: Cdf + ?Sized>(cdf: &C, y: f64, delta_x: f64) -> Result<f64> {
    let f_y = cdf.value(y);
    let f_dx = cdf.value(delta_x);
    if f_dx <= 0.0 {
        return Err(Error::ZeroProbability(format!(
            "distance CDF vanishes at delta x = {delta_x}"
        )));
    }
    if f_y <= 0.0 {
        return Err(Error::ZeroProbability(format!(
            "distance CDF vanishes at y = {y}"
        )));
    }
    Ok((f_y / f_dx).ln())
}

fn assemble(
    variant: BoundVariant,
    eta: f64,
    ratio_log: f64,
    den_lower: f64,
    den_upper: f64,
    triple: &PerturbationTriple,
) -> BoundResult {
    let flags = BoundFlags {
        instability: den_lower.abs() < INSTABILITY_EPS || den_upper.abs() < INSTABILITY_EPS,
        sign_mismatch: ratio_log == 0.0
            || ratio_log.signum() != den_lower.signum()
            || ratio_log.signum() != den_upper.signum(),
        delta_constraint: triple.delta() >= triple.y() / triple.x(),
    };
    BoundResult {
        variant,
        eta,
        ratio_log,
        lower: ratio_log / den_lower,
        upper: ratio_log / den_upper,
        flags,
        geometry: Geometry::of(triple),
    }
}

/// The general sandwich at tolerance `eta`: numerator
/// ln(F_b(y)/F_b(delta x)) over denominators ln(rho +- eta).
///
/// Feasibility of eta is the caller's concern (see [`eta_grid`]); an
/// infeasible eta yields a result with warning flags set rather than an
/// error, except where the formula itself is undefined.
pub fn lid_bounds<C: Cdf + ?Sized>(
    triple: &PerturbationTriple,
    cdf: &C,
    eta: f64,
) -> Result<BoundResult> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Argument(format!(
            "eta must be positive and finite, got {eta}"
        )));
    }
    let y = triple.y();
    let delta_x = triple.delta_x();
    if y == delta_x {
        return Err(Error::DegenerateGeometry(
            "y equals delta x, the anchor distances carry no ratio information".into(),
        ));
    }
    let ratio = y / delta_x;
    if ratio - eta <= 0.0 {
        return Err(Error::Domain(format!(
            "eta = {eta} is at least the distance ratio {ratio}, upper denominator undefined"
        )));
    }
    let ratio_log = numerator(cdf, y, delta_x)?;
    Ok(assemble(
        BoundVariant::General,
        eta,
        ratio_log,
        (ratio + eta).ln(),
        (ratio - eta).ln(),
        triple,
    ))
}

/// The directional sandwich at tolerance `eta`, with denominators
/// ln(1/delta +- eta): the greatest bounds for away perturbations, the
/// least for toward ones.
pub fn directional_bounds<C: Cdf + ?Sized>(
    triple: &PerturbationTriple,
    cdf: &C,
    eta: f64,
) -> Result<BoundResult> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Argument(format!(
            "eta must be positive and finite, got {eta}"
        )));
    }
    let delta = triple.delta();
    if delta >= 1.0 {
        return Err(Error::EmptyEtaInterval { delta });
    }
    let variant = match triple.direction_class() {
        DirectionClass::Away => BoundVariant::DirectionalAway,
        DirectionClass::Toward => BoundVariant::DirectionalToward,
        DirectionClass::Boundary => {
            return Err(Error::DegenerateGeometry(
                "perturbation sits on the toward/away boundary".into(),
            ))
        }
    };
    let inv_delta = 1.0 / delta;
    if inv_delta - eta <= 1.0 {
        return Err(Error::Domain(format!(
            "eta = {eta} reaches the directional cap 1/delta - 1 = {}",
            inv_delta - 1.0
        )));
    }
    let ratio_log = numerator(cdf, triple.y(), triple.delta_x())?;
    Ok(assemble(
        variant,
        eta,
        ratio_log,
        (inv_delta + eta).ln(),
        (inv_delta - eta).ln(),
        triple,
    ))
}
