//! Mini-batch Adam with plateau learning-rate decay and early stopping, shared
//! by the local-linear regressor, the classifier and the plain network baseline.

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::NlsConfig;
use crate::autodiff::{
    loss_gradient_with_tape, loss_value, AdamConfig, AdamState, LossParts, Mode, NetworkWeights, Objective,
};
use crate::error::Result;
use crate::linalg::Matrix;

/// Momentum of the running normalization statistics.
const NORM_MOMENTUM: f64 = 0.1;

/// Why training ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `patience` epochs passed without a strictly smaller validation loss.
    EarlyStopping,
    MaxEpochs,
}

/// Per-epoch record of a training run. Entry 0 describes the initial weights.
///
/// Losses are in the standardized target units the optimizer works in. The
/// training loss of epoch 0 is a full Eval-mode pass; later entries average the
/// epoch's mini-batch objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub train_loss: Vec<f64>,
    /// Penalized objective on the held-out early-stopping rows.
    pub validation_loss: Vec<f64>,
    /// Mean squared input Jacobian norm on the held-out rows.
    pub penalty: Vec<f64>,
    pub learning_rate: Vec<f64>,
    pub best_epoch: usize,
    pub stop_reason: StopReason,
}

impl TrainTrace {
    /// Number of training epochs run (excluding the initial evaluation).
    pub fn epochs(&self) -> usize {
        self.train_loss.len() - 1
    }

    pub fn best_validation_loss(&self) -> f64 {
        self.validation_loss[self.best_epoch]
    }
}

/// Output structure that turns network outputs into a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Head {
    /// Squared error of `intercept + Σ out_k · m_k`.
    LocalLinear,
    /// Cross-entropy over per-class local linear scores.
    Softmax,
    /// Squared error of the single network output.
    Direct,
}

/// Training rows in the form the optimizer consumes.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    /// Standardized features, fed to the network.
    pub inputs: Matrix,
    /// Per-row factors the coefficient outputs multiply.
    pub multipliers: Matrix,
    /// Standardized real targets (regression heads).
    pub targets: Vec<f64>,
    /// Class indices (softmax head).
    pub labels: Vec<usize>,
}

impl Problem {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    fn subset(&self, idx: &[usize]) -> Problem {
        Problem {
            inputs: self.inputs.select_rows(idx),
            multipliers: self.multipliers.select_rows(idx),
            targets: if self.targets.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.targets[i]).collect()
            },
            labels: if self.labels.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.labels[i]).collect()
            },
        }
    }

    pub fn objective<'a>(&'a self, head: Head, scalars: &'a [f64]) -> Objective<'a> {
        match head {
            Head::LocalLinear => Objective::LocalLinear {
                multipliers: &self.multipliers,
                targets: &self.targets,
                intercept: scalars[0],
            },
            Head::Softmax => Objective::LocalLinearSoftmax {
                multipliers: &self.multipliers,
                labels: &self.labels,
                intercepts: scalars,
            },
            Head::Direct => Objective::SquaredError { targets: &self.targets },
        }
    }

    pub fn evaluate(&self, weights: &NetworkWeights, head: Head, scalars: &[f64], lambda: f64) -> Result<LossParts> {
        loss_value(weights, &self.inputs, &self.objective(head, scalars), lambda, true)
    }
}

pub(crate) struct Trained {
    pub weights: NetworkWeights,
    pub scalars: Vec<f64>,
    pub trace: TrainTrace,
}

/// Minimizes `data + λ·penalty` on `train`, stopping on `valid`, from the given
/// starting point. Returns the parameters of the best validation epoch.
pub(crate) fn train(
    config: &NlsConfig,
    head: Head,
    mut weights: NetworkWeights,
    mut scalars: Vec<f64>,
    train: &Problem,
    valid: &Problem,
    shuffle_seed: u64,
) -> Result<Trained> {
    config.validate()?;
    let lambda = config.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
    let mut adam = {
        let mut shapes: Vec<usize> = weights.param_slices().iter().map(|s| s.len()).collect();
        shapes.push(scalars.len());
        AdamState::new(
            AdamConfig {
                learning_rate: config.learning_rate,
                ..AdamConfig::default()
            },
            &shapes,
        )
    };
    let stochastic = weights.is_stochastic();
    let has_norm = weights.specs().iter().any(|s| s.use_batch_norm);

    let initial_train = train.evaluate(&weights, head, &scalars, lambda)?;
    let initial_valid = valid.evaluate(&weights, head, &scalars, lambda)?;
    let mut trace = TrainTrace {
        train_loss: vec![initial_train.total],
        validation_loss: vec![initial_valid.total],
        penalty: vec![initial_valid.penalty.unwrap_or(0.0)],
        learning_rate: vec![config.learning_rate],
        best_epoch: 0,
        stop_reason: StopReason::MaxEpochs,
    };
    let mut best = (weights.clone(), scalars.clone());
    let mut best_loss = initial_valid.total;
    let mut since_best = 0;
    let mut since_decay = 0;

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            if has_norm && chunk.len() < 2 {
                continue;
            }
            let batch = train.subset(chunk);
            let mode = if stochastic {
                Mode::Train {
                    dropout_seed: rng.next_u64(),
                }
            } else {
                Mode::Eval
            };
            let objective = batch.objective(head, &scalars);
            let (grad, tape) = loss_gradient_with_tape(&weights, &batch.inputs, &objective, lambda, mode)?;
            sum += grad.parts.total * chunk.len() as f64;
            seen += chunk.len();
            {
                let mut params = weights.param_slices_mut();
                params.push(scalars.as_mut_slice());
                let mut grads = grad.weights.slices();
                grads.push(grad.scalars.as_slice());
                adam.step(&mut params, &grads)?;
            }
            if has_norm {
                tape.update_running_stats(&mut weights, NORM_MOMENTUM);
            }
        }

        let v = valid.evaluate(&weights, head, &scalars, lambda)?;
        trace
            .train_loss
            .push(if seen > 0 { sum / seen as f64 } else { f64::NAN });
        trace.validation_loss.push(v.total);
        trace.penalty.push(v.penalty.unwrap_or(0.0));
        trace.learning_rate.push(adam.learning_rate());

        if v.total < best_loss {
            best_loss = v.total;
            best = (weights.clone(), scalars.clone());
            trace.best_epoch = epoch;
            since_best = 0;
            since_decay = 0;
        } else {
            since_best += 1;
            since_decay += 1;
            if since_best >= config.patience {
                trace.stop_reason = StopReason::EarlyStopping;
                break;
            }
            if since_decay >= config.lr_patience {
                let lr = (adam.learning_rate() * config.lr_decay).max(config.min_learning_rate);
                adam.set_learning_rate(lr);
                since_decay = 0;
            }
        }
    }

    let (weights, scalars) = best;
    Ok(Trained {
        weights,
        scalars,
        trace,
    })
}
