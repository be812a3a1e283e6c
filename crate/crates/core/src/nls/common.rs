use serde::{Deserialize, Serialize};

use super::config::NlsConfig;
use crate::autodiff::{init_weights, mlp_specs, NetworkWeights};
use crate::data::{make_split, Dataset, SplitPlan, Standardization};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed::derive_seed;

pub(crate) const SPLIT_TAG: u64 = 1;
pub(crate) const INIT_TAG: u64 = 2;
pub(crate) const SHUFFLE_TAG: u64 = 3;

/// Smallest training set `fit` accepts.
pub const MIN_TRAIN_ROWS: usize = 20;

/// Fresh network for a model head of `outputs` values. Hidden layers get the
/// standard uniform initialization; the output layer starts at zero so every
/// model begins as the constant mean predictor. With many inputs, random
/// initial coefficients multiply every feature and start the fit far from any
/// sensible solution.
pub(crate) fn initial_network(config: &NlsConfig, inputs: usize, outputs: usize) -> Result<NetworkWeights> {
    let specs = mlp_specs(
        inputs,
        &config.hidden_layers,
        outputs,
        config.batch_norm,
        config.dropout,
    );
    let mut weights = init_weights(&specs, derive_seed(config.seed, INIT_TAG))?;
    if let Some(last) = weights.layers_mut().last_mut() {
        last.weight.as_mut_slice().fill(0.0);
    }
    Ok(weights)
}

/// Location and scale of a real target; the optimizer sees `(y − mean) / std`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub std: f64,
}

impl TargetScale {
    pub fn identity() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }

    /// Mean and population standard deviation; a constant target gets scale 1.
    pub fn fit(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        let std = if std > 1e-12 * (1.0 + mean.abs()) { std } else { 1.0 };
        Self { mean, std }
    }

    pub fn apply(&self, y: f64) -> f64 {
        (y - self.mean) / self.std
    }
}

/// Network inputs (standardized features) and the factors `x_k / std_k` that
/// the coefficient outputs multiply, so that slopes map back to raw units by a
/// division by `std_k`.
pub(crate) fn design(stats: &Standardization, features: &Matrix) -> Result<(Matrix, Matrix)> {
    let inputs = stats.transform(features)?;
    let mut multipliers = features.clone();
    for r in 0..multipliers.rows() {
        for (v, s) in multipliers.row_mut(r).iter_mut().zip(&stats.stds) {
            *v /= s;
        }
    }
    Ok((inputs, multipliers))
}

/// `theta[0] + Σ theta[k+1]·x[k]`, accumulated left to right. Every prediction
/// and explanation total goes through this one function.
pub fn local_linear(theta: &[f64], x: &[f64]) -> f64 {
    let mut acc = theta[0];
    for (t, v) in theta[1..].iter().zip(x) {
        acc += t * v;
    }
    acc
}

pub(crate) fn check_width(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::input(format!(
            "instance has {got} features, model expects {expected}"
        )));
    }
    Ok(())
}

/// Splits `data` into optimization and early-stopping parts by the config's
/// validation fraction.
pub(crate) fn early_stopping_split(data: &Dataset, config: &NlsConfig) -> Result<(Dataset, Dataset)> {
    config.validate()?;
    if data.len() < MIN_TRAIN_ROWS {
        return Err(Error::input(format!(
            "training needs at least {MIN_TRAIN_ROWS} instances, got {}",
            data.len()
        )));
    }
    if data.dim() == 0 {
        return Err(Error::input("training data has no feature columns"));
    }
    let plan = SplitPlan::holdout(1.0 - config.validation_fraction, derive_seed(config.seed, SPLIT_TAG));
    let split = make_split(data.len(), &plan)?;
    Ok((data.subset(&split.indices(0)), data.subset(&split.indices(1))))
}

pub(crate) fn check_pair(train: &Dataset, valid: &Dataset) -> Result<()> {
    if train.is_empty() || valid.is_empty() {
        return Err(Error::input("training and validation sets must be nonempty"));
    }
    if train.dim() == 0 {
        return Err(Error::input("training data has no feature columns"));
    }
    if train.dim() != valid.dim() {
        return Err(Error::input("training and validation sets differ in width"));
    }
    Ok(())
}
