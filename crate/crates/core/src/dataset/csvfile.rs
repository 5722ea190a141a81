//! Headerless CSV loader: one point per row, numeric fields, optionally a
//! trailing integer class label. Intended as an escape hatch for data that
//! is not in one of the binary formats.

use std::path::Path;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Loads a headerless CSV of floats. With `labels_in_last_column`, the final
/// field of each row is parsed as a non-negative integer class label.
pub fn load_csv(path: &Path, labels_in_last_column: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e))
            }
            _ => Error::format(path, e.to_string()),
        })?;

    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::format(path, format!("row {row}: {e}")))?;
        let fields = record.len();
        let min_fields = if labels_in_last_column { 2 } else { 1 };
        if fields < min_fields {
            return Err(Error::format(
                path,
                format!("row {row} has {fields} fields, need at least {min_fields}"),
            ));
        }
        match width {
            None => width = Some(fields),
            Some(w) if w != fields => {
                return Err(Error::format(
                    path,
                    format!("row {row} has {fields} fields, previous rows had {w}"),
                ));
            }
            _ => {}
        }
        let feature_fields = if labels_in_last_column {
            fields - 1
        } else {
            fields
        };
        for (col, field) in record.iter().take(feature_fields).enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::format(
                    path,
                    format!("row {row}, column {col}: non-numeric {field:?}"),
                )
            })?;
            points.push(value);
        }
        if labels_in_last_column {
            let field = record.get(fields - 1).unwrap();
            let label: u32 = field.trim().parse().map_err(|_| {
                Error::format(
                    path,
                    format!("row {row}: label field {field:?} is not a non-negative integer"),
                )
            })?;
            labels.push(label);
        }
    }
    let width = width.ok_or_else(|| Error::format(path, "file contains no rows"))?;
    let dim = if labels_in_last_column {
        width - 1
    } else {
        width
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Dataset::new(
        name,
        dim,
        points,
        if labels_in_last_column {
            Some(labels)
        } else {
            None
        },
    )
}

/// Writes a dataset as headerless CSV, the inverse of [`load_csv`].
pub fn write_csv(data: &Dataset, path: &Path, include_labels: bool) -> Result<()> {
    if include_labels && data.labels().is_none() {
        return Err(Error::MissingLabels);
    }
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
    for i in 0..data.len() {
        let mut fields: Vec<String> = data.point(i).iter().map(|v| format!("{v}")).collect();
        if include_labels {
            fields.push(data.label(i).unwrap().to_string());
        }
        writer
            .write_record(&fields)
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
