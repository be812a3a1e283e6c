use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture and training hyperparameters shared by every network model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NlsConfig {
    /// Widths of the ELU hidden layers.
    pub hidden_layers: Vec<usize>,
    /// Strength of the input-gradient penalty on the coefficient functions.
    pub lambda: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Epochs without a strictly better validation loss before stopping.
    pub patience: usize,
    /// Fraction of the training data held out for early stopping.
    pub validation_fraction: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub batch_norm: bool,
    pub dropout: f64,
    /// Epochs without improvement before the learning rate is decayed.
    pub lr_patience: usize,
    /// Multiplier applied to the learning rate on a plateau.
    pub lr_decay: f64,
    /// The learning rate is never decayed below this.
    pub min_learning_rate: f64,
}

impl Default for NlsConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![100],
            lambda: 0.0,
            learning_rate: 1e-3,
            batch_size: 128,
            patience: 50,
            validation_fraction: 0.1,
            max_epochs: 2000,
            seed: 0,
            batch_norm: false,
            dropout: 0.0,
            lr_patience: 20,
            lr_decay: 0.1,
            min_learning_rate: 1e-7,
        }
    }
}

impl NlsConfig {
    /// Checks every field; the error names the first offending one.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.hidden_layers.iter().position(|&w| w == 0) {
            return Err(Error::config(format!("hidden_layers[{i}]"), "width must be >= 1"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config(
                "lambda",
                format!("must be finite and >= 0, got {}", self.lambda),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate", "must be finite and > 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be >= 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience", "must be >= 1"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::config("validation_fraction", "must lie in (0, 1)"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs", "must be >= 1"));
        }
        if !(self.dropout >= 0.0 && self.dropout < 1.0) {
            return Err(Error::config("dropout", "must lie in [0, 1)"));
        }
        if self.lr_patience == 0 {
            return Err(Error::config("lr_patience", "must be >= 1"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::config("lr_decay", "must lie in (0, 1]"));
        }
        if !(self.min_learning_rate.is_finite() && self.min_learning_rate >= 0.0) {
            return Err(Error::config("min_learning_rate", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_hidden(mut self, hidden: Vec<usize>) -> Self {
        self.hidden_layers = hidden;
        self
    }
}
