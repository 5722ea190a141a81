//! Shared fixtures and independent oracles for the integration suites.

use std::path::{Path, PathBuf};

use lidbounds::cdf::DistanceCdf;
use lidbounds::dataset::{load_mnist, Dataset};

/// The checked-in labeled image fixture: real handwritten digit scans
/// (the classic 1797-sample 8x8 test set), bilinearly upsampled to 28x28
/// and stored as an IDX pair. Setting LIDBOUNDS_MNIST_DIR to a directory
/// holding real MNIST IDX files (t10k-* or train-* names) swaps it in.
pub fn image_fixture() -> Dataset {
    let dir = match std::env::var("LIDBOUNDS_MNIST_DIR") {
        Ok(custom) => PathBuf::from(custom),
        Err(_) => Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/digits"),
    };
    for (images, labels) in [
        ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ] {
        let ip = dir.join(images);
        let lp = dir.join(labels);
        if ip.is_file() && lp.is_file() {
            return load_mnist(&ip, &lp).expect("image fixture must load");
        }
    }
    panic!("no IDX pair found under {}", dir.display());
}

/// Independent CDF oracle: composite Simpson integration of the
/// Gaussian-kernel density (built from exp, not erfc) from below the
/// sample's support up to `r`, step h/50. Truncation below the support
/// and the quadrature error are both far under 1e-7 for these inputs.
pub fn integrated_kde_oracle(cdf: &DistanceCdf, r: f64) -> f64 {
    let h = cdf.bandwidth();
    let sample = cdf.sample();
    let lo = sample.iter().copied().fold(f64::INFINITY, f64::min) - 8.0 * h;
    if r <= lo {
        return 0.0;
    }
    let steps = (((r - lo) / (h / 50.0)).ceil() as usize).max(2);
    let steps = steps + steps % 2;
    let dt = (r - lo) / steps as f64;
    let norm = 1.0 / (sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let density = |t: f64| -> f64 {
        let mut acc = 0.0;
        for d in sample {
            let z = (t - d) / h;
            acc += (-0.5 * z * z).exp();
        }
        acc * norm
    };
    let mut sum = density(lo) + density(r);
    for i in 1..steps {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * density(lo + i as f64 * dt);
    }
    sum * dt / 3.0
}
