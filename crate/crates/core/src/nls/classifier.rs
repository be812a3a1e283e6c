use std::path::Path;

use serde::{Deserialize, Serialize};

use super::common::{
    check_pair, check_width, design, early_stopping_split, initial_network, local_linear, SHUFFLE_TAG,
};
use super::config::NlsConfig;
use super::trainer::{train as run_training, Head, Problem, TrainTrace};
use crate::autodiff::{forward, log_sum_exp, Mode, NetworkWeights};
use crate::data::{Dataset, Standardization};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::seed::derive_seed;

const KIND: &str = "nls_classifier";

/// Neural local smoother for classification. Class `c` has its own intercept
/// and slope functions; `P(Y = c | x) ∝ exp(θ_0^c + Σ θ_i^c(x)·x_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ClassifierDocument", into = "ClassifierDocument")]
pub struct NlsClassifier {
    /// Network with `classes·d` outputs; class `c` owns outputs `c·d .. (c+1)·d`.
    weights: NetworkWeights,
    intercepts: Vec<f64>,
    /// Original label value of each class index.
    classes: Vec<i64>,
    input_stats: Standardization,
    config: NlsConfig,
}

#[derive(Serialize, Deserialize)]
struct ClassifierDocument {
    format_version: u32,
    kind: String,
    lambda: f64,
    classes: Vec<i64>,
    intercepts: Vec<f64>,
    input_stats: Standardization,
    config: NlsConfig,
    weights: NetworkWeights,
}

impl From<NlsClassifier> for ClassifierDocument {
    fn from(m: NlsClassifier) -> Self {
        ClassifierDocument {
            format_version: super::MODEL_FORMAT_VERSION,
            kind: KIND.to_string(),
            lambda: m.config.lambda,
            classes: m.classes,
            intercepts: m.intercepts,
            input_stats: m.input_stats,
            config: m.config,
            weights: m.weights,
        }
    }
}

impl TryFrom<ClassifierDocument> for NlsClassifier {
    type Error = Error;

    fn try_from(doc: ClassifierDocument) -> Result<Self> {
        if doc.format_version != super::MODEL_FORMAT_VERSION {
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
        NlsClassifier::from_parts(doc.weights, doc.intercepts, doc.classes, doc.input_stats, config)
    }
}

/// Distinct class labels of `data`, ascending, and each row's class index.
fn encode_labels(data: &Dataset) -> Result<(Vec<i64>, Vec<usize>)> {
    let raw = data.class_labels()?;
    let mut classes: Vec<i64> = raw.iter().map(|&l| l as i64).collect();
    classes.sort_unstable();
    classes.dedup();
    let index = raw
        .iter()
        .map(|&l| classes.binary_search(&(l as i64)).expect("label present"))
        .collect();
    Ok((classes, index))
}

impl NlsClassifier {
    pub fn from_parts(
        weights: NetworkWeights,
        intercepts: Vec<f64>,
        classes: Vec<i64>,
        input_stats: Standardization,
        config: NlsConfig,
    ) -> Result<Self> {
        let d = weights.input_width();
        let k = intercepts.len();
        if k < 2 {
            return Err(Error::config("classes", "a classifier needs at least two classes"));
        }
        if classes.len() != k {
            return Err(Error::config("classes", "one label per intercept required"));
        }
        if weights.output_width() != k * d {
            return Err(Error::config(
                "weights",
                format!("network has {} outputs, expected {k}·{d}", weights.output_width()),
            ));
        }
        if input_stats.dim() != d {
            return Err(Error::config("input_stats", "width does not match network"));
        }
        if intercepts.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("intercepts", "must be finite"));
        }
        Ok(Self {
            weights,
            intercepts,
            classes,
            input_stats,
            config,
        })
    }

    pub fn dim(&self) -> usize {
        self.weights.input_width()
    }

    pub fn class_count(&self) -> usize {
        self.intercepts.len()
    }

    /// Original label values, indexed like the probability vector.
    pub fn classes(&self) -> &[i64] {
        &self.classes
    }

    pub fn weights(&self) -> &NetworkWeights {
        &self.weights
    }

    pub fn config(&self) -> &NlsConfig {
        &self.config
    }

    /// Per-class `(θ_0^c, θ_1^c(x), …, θ_d^c(x))` in raw units, one row per class.
    pub fn theta(&self, x: &[f64]) -> Result<Matrix> {
        check_width(self.dim(), x.len())?;
        let d = self.dim();
        let z = self.input_stats.transform(&Matrix::from_vec(1, d, x.to_vec())?)?;
        let out = forward(&self.weights, &z, Mode::Eval)?;
        Ok(Matrix::from_fn(self.class_count(), d + 1, |c, j| {
            if j == 0 {
                self.intercepts[c]
            } else {
                out[(0, c * d + j - 1)] / self.input_stats.stds[j - 1]
            }
        }))
    }

    /// Local linear class scores (logits).
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        let theta = self.theta(x)?;
        Ok((0..self.class_count()).map(|c| local_linear(theta.row(c), x)).collect())
    }

    /// Class probabilities through a log-softmax of the scores.
    pub fn classify_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.scores(x)?))
    }

    /// Label value of the most probable class (lowest index on ties).
    pub fn classify(&self, x: &[f64]) -> Result<i64> {
        let p = self.classify_proba(x)?;
        let mut best = 0;
        for (c, v) in p.iter().enumerate() {
            if *v > p[best] {
                best = c;
            }
        }
        Ok(self.classes[best])
    }

    /// Cross-entropy plus `λ` times the penalty, on `data` whose target holds labels
    /// known to this classifier.
    pub fn penalized_loss(&self, data: &Dataset, lambda: f64) -> Result<super::PenalizedLoss> {
        let problem = self.problem(data)?;
        let parts = problem.evaluate(&self.weights, Head::Softmax, &self.intercepts, lambda)?;
        Ok(super::PenalizedLoss {
            total: parts.total,
            mse: parts.data,
            penalty: parts.penalty.unwrap_or(0.0),
        })
    }

    fn problem(&self, data: &Dataset) -> Result<Problem> {
        check_width(self.dim(), data.dim())?;
        let labels = data
            .class_labels()?
            .into_iter()
            .map(|l| {
                self.classes
                    .binary_search(&(l as i64))
                    .map_err(|_| Error::input(format!("label {l} unknown to the classifier")))
            })
            .collect::<Result<Vec<_>>>()?;
        let (inputs, multipliers) = design(&self.input_stats, &data.features)?;
        Ok(Problem {
            inputs,
            multipliers,
            targets: Vec::new(),
            labels,
        })
    }

    /// Trains with an internal early-stopping split.
    pub fn fit(config: &NlsConfig, train: &Dataset) -> Result<(NlsClassifier, TrainTrace)> {
        let (classes, _) = encode_labels(train)?;
        if classes.len() < 2 {
            return Err(Error::config("target", "classification needs at least two classes"));
        }
        let (fit_part, valid) = early_stopping_split(train, config)?;
        Self::fit_with_validation(config, &fit_part, &valid)
    }

    /// Trains on `train`, early-stopping on `valid`.
    pub fn fit_with_validation(
        config: &NlsConfig,
        train: &Dataset,
        valid: &Dataset,
    ) -> Result<(NlsClassifier, TrainTrace)> {
        config.validate()?;
        check_pair(train, valid)?;
        let (classes, _) = encode_labels(train)?;
        if classes.len() < 2 {
            return Err(Error::config("target", "classification needs at least two classes"));
        }
        let d = train.dim();
        let k = classes.len();
        let input_stats = Standardization::fit_all(&train.features)?;
        let weights = initial_network(config, d, k * d)?;
        let model = NlsClassifier::from_parts(weights, vec![0.0; k], classes, input_stats, config.clone())?;
        let train_problem = model.problem(train)?;
        let valid_problem = model.problem(valid)?;
        let trained = run_training(
            config,
            Head::Softmax,
            model.weights.clone(),
            model.intercepts.clone(),
            &train_problem,
            &valid_problem,
            derive_seed(config.seed, SHUFFLE_TAG),
        )?;
        Ok((
            NlsClassifier {
                weights: trained.weights,
                intercepts: trained.scalars,
                ..model
            },
            trained.trace,
        ))
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

/// `exp(s_c − log Σ exp s)`.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let norm = log_sum_exp(scores);
    scores.iter().map(|s| (s - norm).exp()).collect()
}
