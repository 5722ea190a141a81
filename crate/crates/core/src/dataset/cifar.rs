//! CIFAR-10 binary batch format: each record is 3073 bytes, a label byte
//! followed by 3072 channel-major pixel bytes (1024 red, 1024 green,
//! 1024 blue). Batches carry no header, so a valid file length is an exact
//! multiple of the record size.

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

const RECORD_LEN: usize = 3073;
const PIXELS: usize = 3072;

/// Loads one or more CIFAR-10 batch files, concatenating records in the
/// order the paths are given. Pixels are scaled to [0, 1].
pub fn load_cifar10<P: AsRef<Path>>(batch_paths: &[P]) -> Result<Dataset> {
    if batch_paths.is_empty() {
        return Err(Error::Argument("no CIFAR-10 batch paths given".into()));
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for path in batch_paths {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.is_empty() || bytes.len() % RECORD_LEN != 0 {
            return Err(Error::format(
                path,
                format!(
                    "batch length {} is not a positive multiple of the {RECORD_LEN}-byte record",
                    bytes.len()
                ),
            ));
        }
        for record in bytes.chunks_exact(RECORD_LEN) {
            let label = record[0];
            if label > 9 {
                return Err(Error::format(
                    path,
                    format!("label byte {label} out of range 0..=9"),
                ));
            }
            labels.push(u32::from(label));
            points.extend(record[1..].iter().map(|&b| f64::from(b) / 255.0));
        }
    }
    Dataset::new("cifar10", PIXELS, points, Some(labels))
}
