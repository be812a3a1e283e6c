use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Per-column location and scale. Columns without variation carry scale 1 so
/// they standardize to zeros instead of dividing by zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    /// Column means and population standard deviations over `rows` of `features`.
    pub fn fit(features: &Matrix, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::input("standardization needs at least one fitting row"));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= features.rows()) {
            return Err(Error::input(format!(
                "fitting row {bad} out of range for {} rows",
                features.rows()
            )));
        }
        let d = features.cols();
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        for &r in rows {
            for (m, v) in means.iter_mut().zip(features.row(r)) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for &r in rows {
            for ((s, v), m) in vars.iter_mut().zip(features.row(r)).zip(&means) {
                *s += (v - m).powi(2);
            }
        }
        let stds = vars
            .iter()
            .zip(&means)
            .map(|(s, m)| {
                let std = (s / n).sqrt();
                if std > 1e-12 * (1.0 + m.abs()) {
                    std
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self { means, stds })
    }

    /// Statistics over every row.
    pub fn fit_all(features: &Matrix) -> Result<Self> {
        let rows: Vec<usize> = (0..features.rows()).collect();
        Self::fit(features, &rows)
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.means).zip(&self.stds) {
            *o = (v - m) / s;
        }
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        self.check_width(features.cols())?;
        let mut out = Matrix::zeros(features.rows(), features.cols());
        for r in 0..features.rows() {
            self.transform_row(features.row(r), out.row_mut(r));
        }
        Ok(out)
    }

    pub fn inverse(&self, standardized: &Matrix) -> Result<Matrix> {
        self.check_width(standardized.cols())?;
        let mut out = Matrix::zeros(standardized.rows(), standardized.cols());
        for r in 0..standardized.rows() {
            for (((o, z), m), s) in out
                .row_mut(r)
                .iter_mut()
                .zip(standardized.row(r))
                .zip(&self.means)
                .zip(&self.stds)
            {
                *o = z * s + m;
            }
        }
        Ok(out)
    }

    fn check_width(&self, cols: usize) -> Result<()> {
        if cols != self.dim() {
            return Err(Error::input(format!("expected {} columns, got {cols}", self.dim())));
        }
        Ok(())
    }
}

/// Standardizes every row of `data` with statistics fitted on `fit_rows` only.
pub fn standardize(data: &Dataset, fit_rows: &[usize]) -> Result<Dataset> {
    let stats = Standardization::fit(&data.features, fit_rows)?;
    let features = stats.transform(&data.features)?;
    Ok(Dataset {
        features,
        target: data.target.clone(),
        feature_names: data.feature_names.clone(),
        target_name: data.target_name.clone(),
        stats: Some(stats),
    })
}
