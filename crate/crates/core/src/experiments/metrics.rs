use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the reported standard errors are defined.
pub const STANDARD_ERROR_DEFINITION: &str = "standard error of the mean of per-instance squared (for MSE) or absolute (for MAE) test residuals, sd/sqrt(n), pooled over all test instances of all folds";

/// Test-set error summary in raw target units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub mse: f64,
    pub mae: f64,
    pub mse_se: f64,
    pub mae_se: f64,
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl Metrics {
    /// Metrics of residuals `prediction − target`.
    pub fn from_residuals(residuals: &[f64]) -> Result<Self> {
        if residuals.is_empty() {
            return Err(Error::input("metrics need at least one residual"));
        }
        let sq: Vec<f64> = residuals.iter().map(|r| r * r).collect();
        let abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
        let (mse, mse_se) = mean_and_se(&sq);
        let (mae, mae_se) = mean_and_se(&abs);
        Ok(Metrics {
            n: residuals.len(),
            mse,
            mae,
            mse_se,
            mae_se,
        })
    }

    pub fn evaluate(predictions: &[f64], targets: &[f64]) -> Result<Self> {
        Self::from_residuals(&residuals(predictions, targets)?)
    }
}

pub fn residuals(predictions: &[f64], targets: &[f64]) -> Result<Vec<f64>> {
    if predictions.len() != targets.len() {
        return Err(Error::input(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    Ok(predictions.iter().zip(targets).map(|(p, y)| p - y).collect())
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    Ok(Metrics::evaluate(predictions, targets)?.mse)
}
