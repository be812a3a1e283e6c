use serde::{Deserialize, Serialize};

use super::smoother::{raw_coefficients, DEFAULT_RIDGE};
use crate::data::{Dataset, Standardization};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Matrix};
use crate::nls::local_linear;

/// Global linear regression `θ_0 + Σ θ_i x_i` fitted by least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    /// `(θ_0, θ_1, …, θ_d)` in raw units.
    pub theta: Vec<f64>,
}

impl OlsModel {
    /// Solves the normal equations over standardized features with the same
    /// diagonal stabilizer as the local smoother, so constant columns are harmless.
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::input("least squares needs training data"));
        }
        let stats = Standardization::fit_all(&train.features)?;
        let z = stats.transform(&train.features)?;
        let p = train.dim() + 1;
        let design = Matrix::from_fn(z.rows(), p, |r, c| if c == 0 { 1.0 } else { z[(r, c - 1)] });
        let mut gram = design.t_matmul(&design);
        for k in 0..p {
            gram[(k, k)] += DEFAULT_RIDGE;
        }
        let rhs = design.transpose().matvec(&train.target);
        let beta = cholesky_solve(&gram, &rhs)?;
        Ok(Self {
            theta: raw_coefficients(&beta, &stats),
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        local_linear(&self.theta, x)
    }

    pub fn predict_batch(&self, features: &Matrix) -> Result<Vec<f64>> {
        if features.cols() + 1 != self.theta.len() {
            return Err(Error::input("feature width does not match coefficients"));
        }
        Ok((0..features.rows()).map(|r| self.predict(features.row(r))).collect())
    }
}
