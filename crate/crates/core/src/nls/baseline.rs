use serde::{Deserialize, Serialize};

use super::common::{check_pair, check_width, early_stopping_split, initial_network, TargetScale, SHUFFLE_TAG};
use super::config::NlsConfig;
use super::trainer::{train as run_training, Head, Problem, TrainTrace};
use crate::autodiff::{forward, Mode, NetworkWeights};
use crate::data::{Dataset, Standardization};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::seed::derive_seed;

/// Plain feed-forward regressor: the same architecture and trainer as the
/// smoother, but the network outputs the prediction directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnModel {
    weights: NetworkWeights,
    input_stats: Standardization,
    target_scale: TargetScale,
    config: NlsConfig,
}

impl NnModel {
    /// Trains with an internal early-stopping split. The penalty does not apply
    /// to this model, so `config.lambda` is ignored.
    pub fn fit(config: &NlsConfig, train: &Dataset) -> Result<(NnModel, TrainTrace)> {
        let (fit_part, valid) = early_stopping_split(train, config)?;
        Self::fit_with_validation(config, &fit_part, &valid)
    }

    pub fn fit_with_validation(config: &NlsConfig, train: &Dataset, valid: &Dataset) -> Result<(NnModel, TrainTrace)> {
        let config = config.clone().with_lambda(0.0);
        config.validate()?;
        check_pair(train, valid)?;
        let input_stats = Standardization::fit_all(&train.features)?;
        let target_scale = TargetScale::fit(&train.target);
        let weights = initial_network(&config, train.dim(), 1)?;
        let problem = |data: &Dataset| -> Result<Problem> {
            Ok(Problem {
                inputs: input_stats.transform(&data.features)?,
                multipliers: Matrix::zeros(data.len(), 0),
                targets: data.target.iter().map(|&y| target_scale.apply(y)).collect(),
                labels: Vec::new(),
            })
        };
        let trained = run_training(
            &config,
            Head::Direct,
            weights,
            Vec::new(),
            &problem(train)?,
            &problem(valid)?,
            derive_seed(config.seed, SHUFFLE_TAG),
        )?;
        Ok((
            NnModel {
                weights: trained.weights,
                input_stats,
                target_scale,
                config,
            },
            trained.trace,
        ))
    }

    pub fn dim(&self) -> usize {
        self.weights.input_width()
    }

    pub fn config(&self) -> &NlsConfig {
        &self.config
    }

    pub fn predict_batch(&self, features: &Matrix) -> Result<Vec<f64>> {
        check_width(self.dim(), features.cols())?;
        let out = forward(&self.weights, &self.input_stats.transform(features)?, Mode::Eval)?;
        Ok(out
            .as_slice()
            .iter()
            .map(|o| self.target_scale.mean + self.target_scale.std * o)
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_batch(&Matrix::from_vec(1, x.len(), x.to_vec())?)?[0])
    }
}
