use std::io::{Read, Write};
use std::path::Path;

use super::standardize::Standardization;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A feature matrix with its target column and naming metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub target: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
    /// Statistics the features were standardized with, if they were.
    pub stats: Option<Standardization>,
}

impl Dataset {
    /// Builds a dataset, checking shapes and finiteness.
    pub fn new(
        features: Matrix,
        target: Vec<f64>,
        feature_names: Vec<String>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        if features.rows() != target.len() {
            return Err(Error::input(format!(
                "{} feature rows but {} targets",
                features.rows(),
                target.len()
            )));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::input(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            )));
        }
        if !features.is_finite() || target.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("dataset contains non-finite values"));
        }
        Ok(Self {
            features,
            target,
            feature_names,
            target_name: target_name.into(),
            stats: None,
        })
    }

    /// Dataset with generated column names `x1..xd` and target `y`.
    pub fn unnamed(features: Matrix, target: Vec<f64>) -> Result<Self> {
        let names = (1..=features.cols()).map(|i| format!("x{i}")).collect();
        Self::new(features, target, names, "y")
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// The rows at `indices`, in that order. Statistics are carried over.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            target: indices.iter().map(|&i| self.target[i]).collect(),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            stats: self.stats.clone(),
        }
    }

    /// Target interpreted as integer class labels `0..L`.
    pub fn class_labels(&self) -> Result<Vec<usize>> {
        self.target
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(Error::input(format!(
                        "target {v} at row {i} is not a nonnegative integer class label"
                    )))
                }
            })
            .collect()
    }

    /// Sample mean and unbiased standard deviation of the target.
    pub fn target_moments(&self) -> (f64, f64) {
        mean_std(&self.target)
    }
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Reads a comma-separated file with a header row. Every column must be
/// numeric; `target_column` names the response.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, target_column)
}

/// As [`load_csv`] over any reader. Row numbers in errors are file line numbers,
/// so the first data row is row 2.
pub fn read_csv<R: Read>(reader: R, target_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let target_idx = headers.iter().position(|h| h == target_column).ok_or_else(|| {
        Error::config(
            "target",
            format!("column `{target_column}` not found; header has {headers:?}"),
        )
    })?;
    let width = headers.len();
    let d = width - 1;

    let mut features = Vec::new();
    let mut target = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != width {
            return Err(Error::Ingestion {
                row,
                column: String::from("*"),
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let column = headers[c].clone();
            if cell.is_empty() {
                return Err(Error::Ingestion {
                    row,
                    column,
                    message: String::from("missing value"),
                });
            }
            let value: f64 = cell.parse().map_err(|_| Error::Ingestion {
                row,
                column: column.clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Ingestion {
                    row,
                    column,
                    message: format!("`{cell}` is not finite"),
                });
            }
            if c == target_idx {
                target.push(value);
            } else {
                features.push(value);
            }
        }
    }
    if target.is_empty() {
        return Err(Error::input("CSV contains no data rows"));
    }
    let names = headers
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != target_idx)
        .map(|(_, h)| h.clone())
        .collect();
    let features = Matrix::from_vec(target.len(), d, features)?;
    Dataset::new(features, target, names, target_column)
}

/// Writes features followed by the target column. Floats use the shortest
/// representation that reads back to the identical value.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = data.feature_names.clone();
    header.push(data.target_name.clone());
    wtr.write_record(&header)?;
    for i in 0..data.len() {
        let mut fields: Vec<String> = data.row(i).iter().map(|v| v.to_string()).collect();
        fields.push(data.target[i].to_string());
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}
