//! IDX binary format (big-endian), as used by the classic MNIST files.
//!
//! Image file layout:
//!
//! ```text
//! [0..4)   magic 0x00000803
//! [4..8)   image count
//! [8..12)  rows
//! [12..16) cols
//! [16..)   count * rows * cols unsigned bytes, row-major
//! ```
//!
//! Label file layout: magic 0x00000801, count, then `count` bytes.

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

fn read_u32_be(buf: &[u8], offset: usize, path: &Path, field: &str) -> Result<u32> {
    let bytes: [u8; 4] = buf
        .get(offset..offset + 4)
        .and_then(|s| s.try_into().ok())
        .ok_or_else(|| Error::format(path, format!("file too short to hold {field}")))?;
    Ok(u32::from_be_bytes(bytes))
}

/// Loads an MNIST-style image/label IDX pair. Pixels are scaled to [0, 1]
/// by dividing by 255; each image becomes one `rows * cols` feature vector.
pub fn load_mnist(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = std::fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let labels = std::fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;

    let magic = read_u32_be(&images, 0, images_path, "image magic")?;
    if magic != IMAGE_MAGIC {
        return Err(Error::format(
            images_path,
            format!("image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"),
        ));
    }
    let n = read_u32_be(&images, 4, images_path, "image count")? as usize;
    let rows = read_u32_be(&images, 8, images_path, "row count")? as usize;
    let cols = read_u32_be(&images, 12, images_path, "column count")? as usize;
    if n == 0 || rows == 0 || cols == 0 {
        return Err(Error::format(
            images_path,
            format!("degenerate image header: count={n} rows={rows} cols={cols}"),
        ));
    }
    let expected = 16 + n * rows * cols;
    if images.len() != expected {
        return Err(Error::format(
            images_path,
            format!(
                "image data truncated or padded: expected {expected} bytes, found {}",
                images.len()
            ),
        ));
    }

    let magic = read_u32_be(&labels, 0, labels_path, "label magic")?;
    if magic != LABEL_MAGIC {
        return Err(Error::format(
            labels_path,
            format!("label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"),
        ));
    }
    let n_labels = read_u32_be(&labels, 4, labels_path, "label count")? as usize;
    if n_labels != n {
        return Err(Error::format(
            labels_path,
            format!("label count {n_labels} does not match image count {n}"),
        ));
    }
    if labels.len() != 8 + n {
        return Err(Error::format(
            labels_path,
            format!(
                "label data truncated or padded: expected {} bytes, found {}",
                8 + n,
                labels.len()
            ),
        ));
    }

    let points: Vec<f64> = images[16..].iter().map(|&b| f64::from(b) / 255.0).collect();
    let label_vec: Vec<u32> = labels[8..].iter().map(|&b| u32::from(b)).collect();
    Dataset::new("mnist", rows * cols, points, Some(label_vec))
}
