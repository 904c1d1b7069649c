//! Text-format dataset readers and writers.
//!
//! CSV: optional header line; first column is the label, remaining columns
//! are features. Sparse: `label idx:val idx:val ...` with 1-based indices.
//! Labels 0/1 are mapped to −1/+1 on load; anything outside {−1, 0, 1}
//! is a parse error naming the offending line.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::LabeledDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    Csv,
    SparseIndexValue,
}

fn parse_label(tok: &str, path: &str, line_no: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        path: path.into(),
        line: line_no,
        msg: format!("bad label {tok:?}"),
    })?;
    match v {
        1.0 => Ok(1.0),
        -1.0 | 0.0 => Ok(-1.0),
        _ => Err(Error::Parse {
            path: path.into(),
            line: line_no,
            msg: format!("label must be in {{-1, 0, 1}}, got {tok}"),
        }),
    }
}

/// Loads a CSV dataset. A header is detected by the first line's first field
/// failing to parse as a number.
pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<f64> = Vec::new();
    let mut feature_names: Option<Vec<String>> = None;
    let mut dim: Option<usize> = None;

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if i == 0 && fields[0].trim().parse::<f64>().is_err() {
            feature_names = Some(fields[1..].iter().map(|s| s.trim().to_string()).collect());
            continue;
        }
        let label = parse_label(fields[0], &path_str, line_no)?;
        let mut row = Vec::with_capacity(fields.len() - 1);
        for f in &fields[1..] {
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: line_no,
                msg: format!("bad feature value {f:?}"),
            })?;
            row.push(v);
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse {
                    path: path_str,
                    line: line_no,
                    msg: format!("inconsistent dimension: expected {d}, got {}", row.len()),
                })
            }
            _ => {}
        }
        labels.push(label);
        rows.push(row);
    }
    let mut data = LabeledDataset::from_rows(rows, labels)?;
    data.feature_names = feature_names;
    Ok(data)
}

/// Loads a sparse `label idx:val ...` dataset, inferring the dimension from
/// the largest index seen.
pub fn load_sparse(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    load_sparse_with_dims(path, None)
}

/// Loads a sparse dataset with an explicit dimension override (indices past
/// the override are an error).
pub fn load_sparse_with_dims(
    path: impl AsRef<Path>,
    dims: Option<usize>,
) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let mut parsed: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut max_idx = 0usize;

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let label_tok = toks.next().ok_or_else(|| Error::Parse {
            path: path_str.clone(),
            line: line_no,
            msg: "empty line".into(),
        })?;
        let label = parse_label(label_tok, &path_str, line_no)?;
        let mut entries = Vec::new();
        for tok in toks {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::Parse {
                path: path_str.clone(),
                line: line_no,
                msg: format!("expected idx:val, got {tok:?}"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: line_no,
                msg: format!("bad index {idx_s:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    path: path_str,
                    line: line_no,
                    msg: "sparse indices are 1-based".into(),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: line_no,
                msg: format!("bad value {val_s:?}"),
            })?;
            max_idx = max_idx.max(idx);
            entries.push((idx, val));
        }
        parsed.push((label, entries));
    }

    let d = match dims {
        Some(d) => {
            if max_idx > d {
                return Err(Error::Parse {
                    path: path_str,
                    line: 0,
                    msg: format!("index {max_idx} exceeds declared dimension {d}"),
                });
            }
            d
        }
        None => max_idx,
    };
    let mut rows = Vec::with_capacity(parsed.len());
    let mut labels = Vec::with_capacity(parsed.len());
    for (label, entries) in parsed {
        let mut row = vec![0.0; d];
        for (idx, val) in entries {
            row[idx - 1] = val;
        }
        rows.push(row);
        labels.push(label);
    }
    LabeledDataset::from_rows(rows, labels)
}

/// Writes a dataset as header-less CSV. Floats use the shortest
/// representation that round-trips, so load(save(x)) is bit-exact.
pub fn save_csv(data: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for (row, y) in data.iter_rows() {
        write!(out, "{}", y as i64)?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a dataset in the sparse format (zeros omitted).
pub fn save_sparse(data: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for (row, y) in data.iter_rows() {
        write!(out, "{}", if y > 0.0 { "+1" } else { "-1" })?;
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                write!(out, " {}:{v}", j + 1)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Loads a dataset in either supported format.
pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<LabeledDataset> {
    match format {
        DataFormat::Csv => load_csv(path),
        DataFormat::SparseIndexValue => load_sparse(path),
    }
}
