use std::path::Path;

use ndarray::Array2;

use super::manifest::{DatasetManifest, MissingPolicy};
use super::quantize;
use crate::error::{Error, Result};
use crate::model::StagedDataset;

/// Cell values treated as missing.
pub const MISSING_TOKENS: [&str; 4] = ["", "?", "NA", "NaN"];

enum Cell {
    Value(f64),
    Missing,
    Invalid(String),
}

fn parse_cell(raw: &str) -> Cell {
    let t = raw.trim();
    if MISSING_TOKENS.contains(&t) {
        return Cell::Missing;
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Value(v),
        _ => Cell::Invalid(t.to_string()),
    }
}

/// Reads a headered CSV file into a staged dataset as described by `manifest`.
///
/// Rows are numbered from 1 after the header in error messages.
pub fn load_csv(manifest: &DatasetManifest, path: &Path) -> Result<StagedDataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let position = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            row: 0,
            column: name.to_string(),
            message: format!("column not found in {}", path.display()),
        })
    };
    let label_at = position(&manifest.label_column)?;
    let columns: Vec<&String> = manifest.feature_columns().collect();
    let feature_at = columns.iter().map(|c| position(c)).collect::<Result<Vec<_>>>()?;
    if let Some(extra) = header.iter().find(|h| {
        **h != manifest.label_column && !columns.contains(h) && !manifest.ignore.contains(h)
    }) {
        return Err(Error::Parse {
            row: 0,
            column: extra.clone(),
            message: "column is not assigned to a stage, the label, or the ignore list".into(),
        });
    }

    let d = columns.len();
    let mut values: Vec<Option<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut dropped = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let raw_label = record.get(label_at).unwrap_or("").trim();
        let label = match manifest.label_mapping.get(raw_label) {
            Some(&l) => l,
            None if MISSING_TOKENS.contains(&raw_label) && manifest.missing_policy == MissingPolicy::DropRow => {
                dropped += 1;
                continue;
            }
            None => {
                return Err(Error::Parse {
                    row,
                    column: manifest.label_column.clone(),
                    message: format!("label value `{raw_label}` has no mapping"),
                })
            }
        };
        let mut parsed = Vec::with_capacity(d);
        let mut keep = true;
        for (&at, name) in feature_at.iter().zip(&columns) {
            match parse_cell(record.get(at).unwrap_or("")) {
                Cell::Value(v) => parsed.push(Some(v)),
                Cell::Missing | Cell::Invalid(_) if manifest.missing_policy == MissingPolicy::DropRow => {
                    keep = false;
                    break;
                }
                Cell::Missing => parsed.push(None),
                Cell::Invalid(text) => {
                    return Err(Error::Parse {
                        row,
                        column: (*name).clone(),
                        message: format!("`{text}` is not a number"),
                    })
                }
            }
        }
        if keep {
            values.extend(parsed);
            labels.push(label);
        } else {
            dropped += 1;
        }
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::input(format!("{} has no usable rows", path.display())));
    }

    let mut features = Array2::<f64>::zeros((n, d));
    for (j, name) in columns.iter().enumerate() {
        let mut present: Vec<f64> = (0..n).filter_map(|i| values[i * d + j]).collect();
        let fill = if present.len() < n {
            if present.is_empty() {
                return Err(Error::input(format!("column `{name}` has no values to impute from")));
            }
            present.sort_by(f64::total_cmp);
            let m = present.len();
            if m % 2 == 1 {
                present[m / 2]
            } else {
                0.5 * (present[m / 2 - 1] + present[m / 2])
            }
        } else {
            0.0
        };
        let mut column: Vec<f64> = (0..n).map(|i| values[i * d + j].unwrap_or(fill)).collect();
        if let Some(&levels) = manifest.quantization.get(*name) {
            column = quantize(&column, levels)?;
        }
        for (i, v) in column.into_iter().enumerate() {
            features[[i, j]] = v;
        }
    }

    let data = StagedDataset::new(features, labels, manifest.layout()?)?;
    let (pos, neg) = data.class_counts();
    log::info!(
        "loaded {}: {n} rows ({pos} positive, {neg} negative), {dropped} dropped",
        path.display()
    );
    Ok(data)
}

/// Writes `data` with the given feature column names followed by a `label`
/// column holding `1` / `-1`. Values are written in shortest round-trip form.
pub fn write_csv(data: &StagedDataset, names: &[String], path: &Path) -> Result<()> {
    if names.len() != data.dim() {
        return Err(Error::structure(format!(
            "{} column names for {} coordinates",
            names.len(),
            data.dim()
        )));
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(names.iter().map(String::as_str).chain(["label"]))?;
    for (i, row) in data.rows().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(data.labels()[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
