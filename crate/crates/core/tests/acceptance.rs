//! Acceptance suite: one test per release criterion. Each test prints a
//! single verdict line (criterion N PASS/FAIL/PARTIAL: details) straight
//! to the process stdout so the lines survive harness capture, then
//! asserts what the verdict claims.

mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use lidbounds::bounds::{directional_bounds, eta_feasibility, eta_grid, lid_bounds, GridVariant};
use lidbounds::dataset::{generate_synthetic, SynthKind, SynthSpec};
use lidbounds::experiment::{
    aggregate_by_delta, direction_stats, emit_csv, run_sweep, select_queries, DirectionSource,
    ExperimentConfig,
};
use lidbounds::lid::{mle_lid, PowerLawCdf};
use lidbounds::metric::{all_distances, knn};
use lidbounds::perturb::{from_geometry, make_triple, DirectionClass};
use lidbounds::stats::spearman;

/// Writes one verdict line to the real stdout. The test harness captures
/// the print macros, so successful runs would otherwise swallow the
/// per-criterion lines; appending to fd 1 directly keeps them visible.
fn report(line: &str) {
    use std::io::Write;
    match std::fs::OpenOptions::new()
        .append(true)
        .open("/proc/self/fd/1")
    {
        Ok(mut f) => drop(writeln!(f, "{line}")),
        Err(_) => println!("{line}"),
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Criterion 1: the MLE estimator applied to uniform data on a 4-ball
/// embedded in 50 ambient dimensions recovers a median estimate in
/// [3.0, 5.0] over 50 query points, within 60 s single-threaded.
#[test]
fn criterion_1_estimator_recovers_subspace_dimension() {
    let start = Instant::now();
    let spec = SynthSpec {
        intrinsic_dim: 4,
        ambient_dim: 50,
        n: 5000,
        kind: SynthKind::UniformBall,
        seed: 0,
    };
    let data = generate_synthetic(&spec).unwrap();
    let queries = select_queries(data.len(), 50, 0).unwrap();
    let mut estimates: Vec<f64> = queries
        .iter()
        .map(|&qi| {
            let neighbors = knn(&data, data.point(qi), 100, Some(qi)).unwrap();
            mle_lid(&neighbors).unwrap().value
        })
        .collect();
    estimates.sort_by(f64::total_cmp);
    let median = estimates[estimates.len() / 2];
    let elapsed = start.elapsed();

    let in_range = (3.0..=5.0).contains(&median);
    let in_time = elapsed <= Duration::from_secs(60);
    report(&format!(
        "criterion 1 {}: median MLE estimate {:.4} on m=4 d=50 n=5000 k=100 over 50 queries \
         (target [3.0, 5.0]) in {:.2}s single-threaded (limit 60s)",
        verdict(in_range && in_time),
        median,
        elapsed.as_secs_f64()
    ));
    assert!(in_range, "median {median} outside [3.0, 5.0]");
    assert!(in_time, "took {elapsed:?}, limit 60s");
}

/// Criterion 2: the (delta, theta) classification rule agrees with the
/// direct y-vs-x comparison on 10^4 random triples, with disagreements
/// only allowed inside the 1e-9 relative boundary band.
#[test]
fn criterion_2_direction_rule_matches_distance_comparison() {
    let mut rng = StdRng::seed_from_u64(2);
    let mut checked = 0usize;
    let mut in_band = 0usize;
    let mut away = 0usize;
    let mut toward = 0usize;
    let mut violations = 0usize;

    while checked < 10_000 {
        let dim = rng.gen_range(2..=8usize);
        let a: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut direction: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        direction.iter_mut().for_each(|v| *v /= norm);
        let c: Vec<f64> = a
            .iter()
            .map(|&v| v + rng.sample::<f64, _>(StandardNormal))
            .collect();
        if c.iter()
            .zip(&a)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            < 1e-12
        {
            continue;
        }
        let delta = rng.gen_range(0.02..2.5);
        let triple = match make_triple(&a, &direction, delta, &c) {
            Ok(t) => t,
            Err(_) => continue,
        };
        checked += 1;

        let (x, y) = (triple.x(), triple.y());
        let rule_away = triple.delta() > 2.0 * triple.theta().cos();
        if (y - x).abs() <= 1e-9 * x {
            // Inside the band either verdict is acceptable.
            in_band += 1;
            continue;
        }
        if rule_away != (y > x) {
            violations += 1;
        }
        match triple.direction_class() {
            DirectionClass::Away => {
                away += 1;
                if y <= x {
                    violations += 1;
                }
            }
            DirectionClass::Toward => {
                toward += 1;
                if y >= x {
                    violations += 1;
                }
            }
            DirectionClass::Boundary => violations += 1,
        }
    }

    report(&format!(
        "criterion 2 {}: {} violations over 10^4 random triples \
         ({} away, {} toward, {} inside the 1e-9 boundary band)",
        verdict(violations == 0),
        violations,
        away,
        toward,
        in_band
    ));
    assert_eq!(violations, 0);
    assert!(
        away > 1000 && toward > 1000,
        "sampling must exercise both classes"
    );
}

/// Criterion 3: on exact power-law CDFs F(r) = (r/w)^m the sandwich
/// contains the true exponent for every feasible eta, and collapses onto
/// it as eta vanishes.
#[test]
fn criterion_3_exact_sandwich_on_power_law_cdfs() {
    let ms = [1.0, 2.0, 5.0, 10.0];
    let mut rng = StdRng::seed_from_u64(3);
    let mut trials = 0usize;
    let mut violations = 0usize;

    while trials < 10_000 {
        let m = ms[rng.gen_range(0..ms.len())];
        let cdf = PowerLawCdf::new(m, 50.0).unwrap();
        let x = rng.gen_range(0.2..2.0);
        let delta = rng.gen_range(0.05..2.4);
        let theta = rng.gen_range(0.0..PI);
        let triple = match from_geometry(x, delta, theta) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let grid = match eta_grid(&triple, m, GridVariant::General, 6) {
            Ok(g) => g,
            Err(_) => continue,
        };
        for f in grid.iter().filter(|f| f.feasible) {
            let b = lid_bounds(&triple, &cdf, f.eta).unwrap();
            trials += 1;
            let clean = !(b.flags.instability || b.flags.sign_mismatch || b.flags.delta_constraint);
            // Feasible eta implies rho > 1, so lower <= upper in order.
            if !clean || b.lower > m * (1.0 + 1e-9) || b.upper < m * (1.0 - 1e-9) {
                violations += 1;
            }
            if trials == 10_000 {
                break;
            }
        }
    }

    // eta -> 0: both ends converge onto the exponent. The geometry keeps
    // the distance ratio well above 1 so the denominators stay away from
    // zero and the collapse rate is dominated by eta itself.
    let mut max_gap = 0.0f64;
    for m in ms {
        let cdf = PowerLawCdf::new(m, 50.0).unwrap();
        let triple = from_geometry(1.0, 0.8, 2.0).unwrap();
        let b = lid_bounds(&triple, &cdf, 1e-9).unwrap();
        max_gap = max_gap.max((b.lower - m).abs()).max((b.upper - m).abs());
    }

    report(&format!(
        "criterion 3 {}: containment {}/10000 trials across m in {{1,2,5,10}}; \
         eta->0 collapse gap {:.2e} (tolerance 1e-6)",
        verdict(violations == 0 && max_gap <= 1e-6),
        10_000 - violations,
        max_gap
    ));
    assert_eq!(violations, 0);
    assert!(max_gap <= 1e-6, "collapse gap {max_gap}");
}

/// Criterion 4: ordering of the directional (angle-extreme) bounds
/// against the general (measured-ratio) bounds, as stated for away and
/// toward perturbations with delta < 1 and feasible eta.
///
/// The pairwise orderings that follow from denominator monotonicity hold
/// everywhere and are asserted with zero tolerance for violations: away
/// perturbations have rho = y/(delta x) > 1/delta, so both directional
/// bounds sit above their general counterparts; toward perturbations
/// reverse both comparisons; and the general pair always brackets the
/// true exponent on exact power laws.
///
/// The full interleaved chain additionally places the directional lower
/// bound below the true LID (away) and the directional upper bound above
/// it (toward). That step substitutes the angle-extreme denominator into
/// only one side of a two-sided sandwich, which enlarges a lower bound
/// (or shrinks an upper bound) past the quantity it brackets whenever
/// the measured ratio sits far from its angular extreme. Concretely:
/// m = 2, x = 1, delta = 0.5, theta = pi/2, eta = 0.05 gives rho =
/// 2.2361, general pair (1.9465, 2.0578) bracketing 2, but directional
/// lower 1.6094/ln(2.05) = 2.2421 > 2. The chain does hold once rho is
/// within eta of 1/delta, i.e. near the boundary angle acos(delta/2);
/// this test asserts exactly that, measures the violation rate of the
/// interleaved step elsewhere, and reports it rather than asserting it.
#[test]
fn criterion_4_directional_chain_ordering() {
    let ms = [1.0, 2.0, 5.0, 10.0];
    let mut rng = StdRng::seed_from_u64(4);
    let slack = 1e-9;

    let mut pair_violations = 0usize;
    let mut chain_break_away = 0usize;
    let mut chain_break_toward = 0usize;
    let mut away_pairs = 0usize;
    let mut toward_pairs = 0usize;

    // Random fixtures over the full feasible geometry, 10^4 (fixture,
    // eta) pairs per class.
    while away_pairs < 10_000 || toward_pairs < 10_000 {
        let m = ms[rng.gen_range(0..ms.len())];
        let cdf = PowerLawCdf::new(m, 50.0).unwrap();
        let delta = rng.gen_range(0.05..0.95);
        let theta = rng.gen_range(0.0..PI);
        let triple = match from_geometry(1.0, delta, theta) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let class = triple.direction_class();
        let want_more = match class {
            DirectionClass::Away => away_pairs < 10_000,
            DirectionClass::Toward => toward_pairs < 10_000,
            DirectionClass::Boundary => false,
        };
        if !want_more {
            continue;
        }
        let grid = match eta_grid(&triple, m, GridVariant::Directional, 4) {
            Ok(g) => g,
            Err(_) => continue,
        };
        for f in grid.iter().filter(|f| f.feasible) {
            let g = lid_bounds(&triple, &cdf, f.eta).unwrap();
            let d = directional_bounds(&triple, &cdf, f.eta).unwrap();
            match class {
                DirectionClass::Away => {
                    if away_pairs == 10_000 {
                        break;
                    }
                    away_pairs += 1;
                    // Valid links: general below directional on both
                    // ends, true LID inside the general pair.
                    if g.lower > d.lower * (1.0 + slack)
                        || g.upper > d.upper * (1.0 + slack)
                        || g.lower > m * (1.0 + slack)
                        || g.upper < m * (1.0 - slack)
                    {
                        pair_violations += 1;
                    }
                    // Interleaved step: directional lower below LID.
                    if d.lower > m * (1.0 + slack) {
                        chain_break_away += 1;
                    }
                }
                DirectionClass::Toward => {
                    if toward_pairs == 10_000 {
                        break;
                    }
                    toward_pairs += 1;
                    if d.lower > g.lower * (1.0 + slack)
                        || d.upper > g.upper * (1.0 + slack)
                        || g.lower > m * (1.0 + slack)
                        || g.upper < m * (1.0 - slack)
                    {
                        pair_violations += 1;
                    }
                    // Interleaved step: directional upper above LID.
                    if d.upper < m * (1.0 - slack) {
                        chain_break_toward += 1;
                    }
                }
                DirectionClass::Boundary => {}
            }
        }
    }

    // Near the boundary angle the measured ratio approaches 1/delta and
    // the full interleaved chains must hold exactly. delta stays in
    // (0.5, 0.9) so eta = 0.05 clears every feasibility cap.
    let mut near_boundary_ok = 0usize;
    let near_boundary_total = 600usize;
    for i in 0..near_boundary_total {
        let away_side = i % 2 == 0;
        let m = if rng.gen_bool(0.5) { 2.0 } else { 5.0 };
        let cdf = PowerLawCdf::new(m, 50.0).unwrap();
        let delta: f64 = rng.gen_range(0.5..0.9);
        let eps = rng.gen_range(0.001..0.01);
        let boundary = (delta / 2.0).acos();
        let theta = if away_side {
            boundary + eps
        } else {
            boundary - eps
        };
        let triple = from_geometry(1.0, delta, theta).unwrap();
        let eta = 0.05;
        let f = eta_feasibility(&triple, m, GridVariant::Directional, eta).unwrap();
        assert!(
            f.feasible,
            "eta 0.05 must be feasible at delta {delta} eps {eps}"
        );
        let g = lid_bounds(&triple, &cdf, eta).unwrap();
        let d = directional_bounds(&triple, &cdf, eta).unwrap();
        let ok = if away_side {
            assert_eq!(triple.direction_class(), DirectionClass::Away);
            g.lower <= d.lower * (1.0 + slack)
                && d.lower <= m * (1.0 + slack)
                && m <= g.upper * (1.0 + slack)
                && g.upper <= d.upper * (1.0 + slack)
        } else {
            assert_eq!(triple.direction_class(), DirectionClass::Toward);
            d.lower <= g.lower * (1.0 + slack)
                && g.lower <= m * (1.0 + slack)
                && m <= d.upper * (1.0 + slack)
                && d.upper <= g.upper * (1.0 + slack)
        };
        near_boundary_ok += ok as usize;
    }

    let pairwise_pass = pair_violations == 0;
    let boundary_pass = near_boundary_ok == near_boundary_total;
    report(&format!(
        "criterion 4 {}: pairwise directional-vs-general orderings {} \
         (0 tolerated, {} observed over 10^4 away + 10^4 toward pairs); \
         full chains near the boundary angle {} ({}/{}); \
         literal interleaved chain FAILS as stated away from the boundary: \
         directional lower exceeds the true LID on {}/10000 away pairs and \
         directional upper undershoots it on {}/10000 toward pairs \
         (example: m=2 delta=0.5 theta=pi/2 eta=0.05 gives directional \
         lower 2.2421 > 2); orderings asserted are the attainable ones",
        if pairwise_pass && boundary_pass {
            "PARTIAL"
        } else {
            "FAIL"
        },
        verdict(pairwise_pass),
        pair_violations,
        verdict(boundary_pass),
        near_boundary_ok,
        near_boundary_total,
        chain_break_away,
        chain_break_toward,
    ));
    assert_eq!(pair_violations, 0, "pairwise orderings must never fail");
    assert_eq!(
        near_boundary_ok, near_boundary_total,
        "chains must hold near the boundary"
    );
    // The interleaved step is genuinely false in the interior; if these
    // ever drop to zero the criterion should be revisited as stated.
    assert!(chain_break_away > 0, "away chain break must be observable");
    assert!(
        chain_break_toward > 0,
        "toward chain break must be observable"
    );
}

struct FixtureSweep {
    rows: Vec<lidbounds::experiment::SweepRow>,
    elapsed: Duration,
}

fn fixture_config() -> ExperimentConfig {
    ExperimentConfig {
        subsample: Some(1000),
        k: 100,
        n_q: 50,
        delta_grid: (1..=10).map(|i| i as f64 * 0.25).collect(),
        eta_grid_size: 50,
        seed: 7,
        direction_source: DirectionSource::Surrogate {
            epochs: 30,
            learning_rate: 0.5,
        },
    }
}

/// The image-fixture sweep shared by criteria 5, 6 and 7.
fn fixture_sweep() -> &'static FixtureSweep {
    static SWEEP: OnceLock<FixtureSweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let data = common::image_fixture();
        let start = Instant::now();
        let rows = run_sweep(&data, &fixture_config()).unwrap();
        FixtureSweep {
            rows,
            elapsed: start.elapsed(),
        }
    })
}

/// Criterion 5: on the image fixture (n=1000, k=100, 50 queries,
/// delta in {0.25,...,2.5}) the eta-averaged lower bound rises with the
/// perturbation size: Spearman >= 0.9 over the per-delta means, and
/// lower bound, LID estimate and upper bound are all larger at
/// delta = 2.5 than at 0.25. Budget: 10 minutes.
#[test]
fn criterion_5_lower_bound_tracks_perturbation_size() {
    let sweep = fixture_sweep();
    let points = aggregate_by_delta(&sweep.rows);
    assert_eq!(points.len(), 10);
    let deltas: Vec<f64> = points.iter().map(|p| p.delta).collect();
    let lower: Vec<f64> = points
        .iter()
        .map(|p| p.mean_lower.expect("every delta must have feasible rows"))
        .collect();
    let lid: Vec<f64> = points.iter().map(|p| p.mean_lid.unwrap()).collect();
    let upper: Vec<f64> = points.iter().map(|p| p.mean_upper.unwrap()).collect();

    let rho = spearman(&deltas, &lower).unwrap();
    let trend = rho >= 0.9;
    let endpoints = lower[9] > lower[0] && lid[9] > lid[0] && upper[9] > upper[0];
    let in_time = sweep.elapsed <= Duration::from_secs(600);
    report(&format!(
        "criterion 5 {}: spearman(delta, mean lower bound) = {:.4} (need >= 0.9); \
         delta 0.25 -> 2.5 endpoints: lower {:.2} -> {:.2}, lid {:.2} -> {:.2}, \
         upper {:.2} -> {:.2}; sweep took {:.1}s (limit 600s)",
        verdict(trend && endpoints && in_time),
        rho,
        lower[0],
        lower[9],
        lid[0],
        lid[9],
        upper[0],
        upper[9],
        sweep.elapsed.as_secs_f64()
    ));
    assert!(trend, "spearman {rho} below 0.9");
    assert!(
        endpoints,
        "endpoint means must increase from delta 0.25 to 2.5"
    );
    assert!(in_time, "sweep took {:?}", sweep.elapsed);
}

/// Criterion 6: surrogate-driven perturbations on the image fixture move
/// the perturbed point toward the reference in well under 15% of rows.
#[test]
fn criterion_6_toward_fraction_is_small() {
    let sweep = fixture_sweep();
    let stats = direction_stats(&sweep.rows).unwrap();
    let pass = stats.toward < 0.15;
    report(&format!(
        "criterion 6 {}: toward fraction {:.4} (need < 0.15) over {} classified rows; \
         away {:.4}, boundary {:.4}",
        verdict(pass),
        stats.toward,
        stats.n,
        stats.away,
        stats.boundary
    ));
    assert!(pass, "toward fraction {} reached 0.15", stats.toward);
}

/// Criterion 7: a seeded sweep is byte-identical across repeat runs and
/// across thread-pool sizes.
#[test]
fn criterion_7_sweep_is_deterministic() {
    let baseline = fixture_sweep();
    let data = common::image_fixture();
    let config = fixture_config();

    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_sweep(&data, &config))
        .unwrap();
    let three = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| run_sweep(&data, &config))
        .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, rows| {
        let path = dir.path().join(name);
        emit_csv(rows, &path).unwrap();
        std::fs::read(&path).unwrap()
    };
    let a = write("base.csv", &baseline.rows);
    let b = write("single.csv", &single);
    let c = write("three.csv", &three);

    let pass = a == b && b == c;
    report(&format!(
        "criterion 7 {}: {} CSV bytes identical across a repeat run and \
         thread pools of 1 and 3 (vs the shared-pool baseline)",
        verdict(pass),
        a.len()
    ));
    assert_eq!(a, b, "single-thread run diverged");
    assert_eq!(b, c, "three-thread run diverged");
}

/// Criterion 8: the erfc-sum kernel CDF matches composite-Simpson
/// integration of its own density to 1e-6 absolute on N=1000 samples,
/// and is monotone and bounded over a 10^4-point scan.
#[test]
fn criterion_8_kernel_cdf_accuracy() {
    use lidbounds::cdf::DistanceCdf;

    // Fixture A: heavy-tailed synthetic distances.
    let mut rng = StdRng::seed_from_u64(8);
    let synthetic: Vec<f64> = (0..1000)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (0.75 * z).exp()
        })
        .collect();
    // Fixture B: real distances from an image-fixture point.
    let data = common::image_fixture();
    let mut measured = all_distances(&data, data.point(0), Some(0)).unwrap();
    measured.truncate(1000);

    let mut max_err = 0.0f64;
    let mut scan_ok = true;
    for sample in [&synthetic, &measured] {
        assert_eq!(sample.len(), 1000);
        let cdf = DistanceCdf::fit(sample).unwrap();
        let hi = sample.iter().copied().fold(0.0f64, f64::max) + 4.0 * cdf.bandwidth();
        for i in 0..=24 {
            let r = hi * (i as f64 + 0.5) / 25.0;
            let err = (cdf.eval(r).unwrap() - common::integrated_kde_oracle(&cdf, r)).abs();
            max_err = max_err.max(err);
        }
        let mut prev = 0.0f64;
        for i in 0..10_000 {
            let r = hi * i as f64 / 9_999.0;
            let v = cdf.eval(r).unwrap();
            if v < prev - 1e-13 || !(0.0..=1.0 + 1e-12).contains(&v) {
                scan_ok = false;
            }
            prev = v;
        }
    }

    let pass = max_err <= 1e-6 && scan_ok;
    report(&format!(
        "criterion 8 {}: max |CDF - density integral| = {:.2e} (need <= 1e-6) on two \
         N=1000 fixtures; monotone and within [0,1] over 10^4-point scans: {}",
        verdict(pass),
        max_err,
        scan_ok
    ));
    assert!(max_err <= 1e-6, "max error {max_err}");
    assert!(scan_ok, "scan found non-monotone or out-of-range values");
}
