use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Element-wise activation applied after a layer's affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `z` for `z ≥ 0`, `e^z − 1` otherwise (α = 1).
    Elu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn value(self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z >= 0.0 {
                    z
                } else {
                    z.exp_m1()
                }
            }
            Activation::Identity => z,
        }
    }

    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z >= 0.0 {
                    1.0
                } else {
                    z.exp()
                }
            }
            Activation::Identity => 1.0,
        }
    }

    /// Second derivative; ELU's is `e^z` below zero and `0` above.
    #[inline]
    pub fn second_derivative(self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z >= 0.0 {
                    0.0
                } else {
                    z.exp()
                }
            }
            Activation::Identity => 0.0,
        }
    }
}

/// Shape and options of one dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
    #[serde(default)]
    pub use_batch_norm: bool,
    #[serde(default)]
    pub dropout_rate: f64,
}

impl LayerSpec {
    pub fn new(input_width: usize, output_width: usize, activation: Activation) -> Self {
        Self {
            input_width,
            output_width,
            activation,
            use_batch_norm: false,
            dropout_rate: 0.0,
        }
    }

    pub fn with_batch_norm(mut self, on: bool) -> Self {
        self.use_batch_norm = on;
        self
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    /// True when Train and Eval modes compute different functions.
    pub fn is_stochastic(&self) -> bool {
        self.use_batch_norm || self.dropout_rate > 0.0
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        if self.input_width == 0 || self.output_width == 0 {
            return Err(Error::config(
                format!("layers[{index}]"),
                "layer widths must be at least 1",
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config(
                format!("layers[{index}].dropout_rate"),
                format!("must lie in [0, 1), got {}", self.dropout_rate),
            ));
        }
        Ok(())
    }
}

/// Validates a layer stack: every layer well formed and adjacent widths agreeing.
pub fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::config("layers", "a network needs at least one layer"));
    }
    for (i, spec) in specs.iter().enumerate() {
        spec.validate(i)?;
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].output_width != pair[1].input_width {
            return Err(Error::config(
                format!("layers[{}]", i + 1),
                format!(
                    "input width {} does not match previous output width {}",
                    pair[1].input_width, pair[0].output_width
                ),
            ));
        }
    }
    Ok(())
}

/// The usual stack: ELU hidden layers followed by an identity output layer.
///
/// Batch normalization and dropout, when requested, apply to hidden layers only.
pub fn mlp_specs(input: usize, hidden: &[usize], output: usize, batch_norm: bool, dropout: f64) -> Vec<LayerSpec> {
    let mut specs = Vec::with_capacity(hidden.len() + 1);
    let mut width = input;
    for &h in hidden {
        specs.push(
            LayerSpec::new(width, h, Activation::Elu)
                .with_batch_norm(batch_norm)
                .with_dropout(dropout),
        );
        width = h;
    }
    specs.push(LayerSpec::new(width, output, Activation::Identity));
    specs
}
