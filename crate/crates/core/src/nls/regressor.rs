use std::path::Path;

use serde::{Deserialize, Serialize};

use super::common::{
    check_pair, check_width, design, early_stopping_split, initial_network, local_linear, TargetScale, SHUFFLE_TAG,
};
use super::config::NlsConfig;
use super::trainer::{train as run_training, Head, Problem, TrainTrace};
use crate::autodiff::{forward, Mode, NetworkWeights};
use crate::data::{Dataset, Standardization};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed::derive_seed;

/// Version written into serialized regression models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Parts of the penalized objective on a set of instances, in standardized
/// target units: `total = mse + λ·penalty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenalizedLoss {
    pub total: f64,
    pub mse: f64,
    /// Mean over instances of `Σ_{k,l} (∂θ_k/∂z_l)²`, with `z` the standardized input.
    pub penalty: f64,
}

/// Neural local smoother for regression: a network maps an instance to slope
/// coefficients `θ_1(x)..θ_d(x)` and the prediction is `θ_0 + Σ θ_i(x)·x_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDocument", into = "ModelDocument")]
pub struct NlsModel {
    weights: NetworkWeights,
    /// Intercept in standardized target units.
    intercept: f64,
    input_stats: Standardization,
    target_scale: TargetScale,
    config: NlsConfig,
    feature_names: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    kind: String,
    lambda: f64,
    intercept: f64,
    target_scale: TargetScale,
    input_stats: Standardization,
    feature_names: Vec<String>,
    config: NlsConfig,
    weights: NetworkWeights,
}

const KIND: &str = "nls_regressor";

impl From<NlsModel> for ModelDocument {
    fn from(m: NlsModel) -> Self {
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            kind: KIND.to_string(),
            lambda: m.config.lambda,
            intercept: m.intercept,
            target_scale: m.target_scale,
            input_stats: m.input_stats,
            feature_names: m.feature_names,
            config: m.config,
            weights: m.weights,
        }
    }
}

impl TryFrom<ModelDocument> for NlsModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!("unsupported model version {}", doc.format_version),
            ));
        }
        if doc.kind != KIND {
            return Err(Error::config(
                "kind",
                format!("expected `{KIND}`, found `{}`", doc.kind),
            ));
        }
        let mut config = doc.config;
        config.lambda = doc.lambda;
        let mut model = NlsModel::from_parts(doc.weights, doc.intercept, doc.input_stats, doc.target_scale, config)?;
        if doc.feature_names.len() == model.dim() {
            model.feature_names = doc.feature_names;
        }
        Ok(model)
    }
}

impl NlsModel {
    /// Assembles a model from explicit parts. `intercept` is in standardized
    /// target units, i.e. the raw `θ_0` is `target_scale.mean + target_scale.std·intercept`.
    pub fn from_parts(
        weights: NetworkWeights,
        intercept: f64,
        input_stats: Standardization,
        target_scale: TargetScale,
        config: NlsConfig,
    ) -> Result<Self> {
        let d = weights.input_width();
        if weights.output_width() != d {
            return Err(Error::config(
                "weights",
                format!(
                    "network maps {d} inputs to {} outputs; need one coefficient per input",
                    weights.output_width()
                ),
            ));
        }
        if input_stats.dim() != d {
            return Err(Error::config("input_stats", "width does not match network"));
        }
        if input_stats.stds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config("input_stats.stds", "must be positive and finite"));
        }
        if !intercept.is_finite() {
            return Err(Error::config("intercept", "must be finite"));
        }
        if !(target_scale.std > 0.0 && target_scale.std.is_finite() && target_scale.mean.is_finite()) {
            return Err(Error::config("target_scale", "needs finite mean and positive std"));
        }
        Ok(Self {
            weights,
            intercept,
            input_stats,
            target_scale,
            config,
            feature_names: (1..=d).map(|i| format!("x{i}")).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.input_width()
    }

    pub fn weights(&self) -> &NetworkWeights {
        &self.weights
    }

    pub fn config(&self) -> &NlsConfig {
        &self.config
    }

    pub fn lambda(&self) -> f64 {
        self.config.lambda
    }

    pub fn input_stats(&self) -> &Standardization {
        &self.input_stats
    }

    pub fn target_scale(&self) -> TargetScale {
        self.target_scale
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// The raw-unit intercept `θ_0`.
    pub fn intercept(&self) -> f64 {
        self.target_scale.mean + self.target_scale.std * self.intercept
    }

    /// `(θ_0, θ_1(x), …, θ_d(x))` in raw units for every row.
    pub fn theta_batch(&self, features: &Matrix) -> Result<Matrix> {
        check_width(self.dim(), features.cols())?;
        let d = self.dim();
        let inputs = self.input_stats.transform(features)?;
        let out = forward(&self.weights, &inputs, Mode::Eval)?;
        let theta0 = self.intercept();
        let s = self.target_scale.std;
        Ok(Matrix::from_fn(features.rows(), d + 1, |r, c| {
            if c == 0 {
                theta0
            } else {
                s * out[(r, c - 1)] / self.input_stats.stds[c - 1]
            }
        }))
    }

    /// `(θ_0, θ_1(x), …, θ_d(x))` in raw units.
    pub fn theta(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_width(self.dim(), x.len())?;
        let m = Matrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.theta_batch(&m)?.into_vec())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(local_linear(&self.theta(x)?, x))
    }

    pub fn predict_batch(&self, features: &Matrix) -> Result<Vec<f64>> {
        let theta = self.theta_batch(features)?;
        Ok((0..features.rows())
            .map(|r| local_linear(theta.row(r), features.row(r)))
            .collect())
    }

    fn problem(&self, data: &Dataset) -> Result<Problem> {
        check_width(self.dim(), data.dim())?;
        let (inputs, multipliers) = design(&self.input_stats, &data.features)?;
        Ok(Problem {
            inputs,
            multipliers,
            targets: data.target.iter().map(|&y| self.target_scale.apply(y)).collect(),
            labels: Vec::new(),
        })
    }

    /// Squared error plus `λ` times the mean squared input Jacobian of the
    /// coefficient network on `data`.
    pub fn penalized_loss(&self, data: &Dataset, lambda: f64) -> Result<PenalizedLoss> {
        if data.is_empty() {
            return Err(Error::input("penalized loss needs a nonempty batch"));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::config("lambda", "must be finite and >= 0"));
        }
        let problem = self.problem(data)?;
        let parts = problem.evaluate(&self.weights, Head::LocalLinear, &[self.intercept], lambda)?;
        Ok(PenalizedLoss {
            total: parts.total,
            mse: parts.data,
            penalty: parts.penalty.unwrap_or(0.0),
        })
    }

    /// Trains a model, holding out `validation_fraction` of `train` for early stopping.
    pub fn fit(config: &NlsConfig, train: &Dataset) -> Result<(NlsModel, TrainTrace)> {
        let (fit_part, valid) = early_stopping_split(train, config)?;
        Self::fit_with_validation(config, &fit_part, &valid)
    }

    /// Trains on `train`, early-stopping on `valid`. Standardization statistics
    /// come from `train` only.
    pub fn fit_with_validation(config: &NlsConfig, train: &Dataset, valid: &Dataset) -> Result<(NlsModel, TrainTrace)> {
        config.validate()?;
        check_pair(train, valid)?;
        let d = train.dim();
        let input_stats = Standardization::fit_all(&train.features)?;
        let target_scale = TargetScale::fit(&train.target);
        let weights = initial_network(config, d, d)?;
        let mut model = NlsModel::from_parts(weights, 0.0, input_stats, target_scale, config.clone())?;
        model.feature_names = train.feature_names.clone();
        model.train_from_here(config, train, valid)
    }

    /// Continues training from this model's weights with a new `λ`, on the same
    /// early-stopping split `fit` would use.
    pub fn warm_fit(&self, lambda: f64, train: &Dataset) -> Result<(NlsModel, TrainTrace)> {
        self.warm_fit_config(&self.config.clone().with_lambda(lambda), train)
    }

    /// As [`NlsModel::warm_fit`] under a new configuration with the same architecture.
    pub fn warm_fit_config(&self, config: &NlsConfig, train: &Dataset) -> Result<(NlsModel, TrainTrace)> {
        let (fit_part, valid) = early_stopping_split(train, config)?;
        self.warm_fit_with_config(config, &fit_part, &valid)
    }

    pub fn warm_fit_with_validation(
        &self,
        lambda: f64,
        train: &Dataset,
        valid: &Dataset,
    ) -> Result<(NlsModel, TrainTrace)> {
        self.warm_fit_with_config(&self.config.clone().with_lambda(lambda), train, valid)
    }

    /// Continues training from this model's weights under `config`, which may
    /// change λ and the optimizer budget but not the architecture.
    pub fn warm_fit_with_config(
        &self,
        config: &NlsConfig,
        train: &Dataset,
        valid: &Dataset,
    ) -> Result<(NlsModel, TrainTrace)> {
        config.validate()?;
        check_pair(train, valid)?;
        if config.hidden_layers != self.config.hidden_layers
            || config.batch_norm != self.config.batch_norm
            || config.dropout != self.config.dropout
        {
            return Err(Error::config(
                "hidden_layers",
                "a warm start must keep the architecture (hidden_layers, batch_norm, dropout)",
            ));
        }
        self.train_from_here(config, train, valid)
    }

    fn train_from_here(&self, config: &NlsConfig, train: &Dataset, valid: &Dataset) -> Result<(NlsModel, TrainTrace)> {
        let train_problem = self.problem(train)?;
        let valid_problem = self.problem(valid)?;
        let trained = run_training(
            config,
            Head::LocalLinear,
            self.weights.clone(),
            vec![self.intercept],
            &train_problem,
            &valid_problem,
            derive_seed(config.seed, SHUFFLE_TAG),
        )?;
        let mut model = self.clone();
        model.weights = trained.weights;
        model.intercept = trained.scalars[0];
        model.config = config.clone();
        Ok((model, trained.trace))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(path, self.to_json()?)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
