use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::{validate_specs, LayerSpec};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Version written into every serialized weight document.
pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

/// Running per-unit statistics of a batch-normalized layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl NormStats {
    fn fresh(width: usize) -> Self {
        Self {
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
        }
    }
}

/// Trainable parameters of one dense layer. `weight` is `output_width × input_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormStats>,
}

/// Weights of a feed-forward network together with the layer specs they belong to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightsDocument", into = "WeightsDocument")]
pub struct NetworkWeights {
    specs: Vec<LayerSpec>,
    layers: Vec<LayerParams>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct WeightsDocument {
    format_version: u32,
    seed: u64,
    specs: Vec<LayerSpec>,
    layers: Vec<LayerParams>,
}

impl From<NetworkWeights> for WeightsDocument {
    fn from(w: NetworkWeights) -> Self {
        WeightsDocument {
            format_version: WEIGHTS_FORMAT_VERSION,
            seed: w.seed,
            specs: w.specs,
            layers: w.layers,
        }
    }
}

impl TryFrom<WeightsDocument> for NetworkWeights {
    type Error = Error;

    fn try_from(doc: WeightsDocument) -> Result<Self> {
        if doc.format_version != WEIGHTS_FORMAT_VERSION {
            return Err(Error::config(
                "format_version",
                format!(
                    "unsupported weights version {} (expected {WEIGHTS_FORMAT_VERSION})",
                    doc.format_version
                ),
            ));
        }
        NetworkWeights::from_parts(doc.specs, doc.layers, doc.seed)
    }
}

/// Draws initial weights: zero-centred uniform with bound `sqrt(6 / (fan_in + fan_out))`,
/// zero biases.
pub fn init_weights(specs: &[LayerSpec], seed: u64) -> Result<NetworkWeights> {
    validate_specs(specs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = specs
        .iter()
        .map(|spec| {
            let (fan_in, fan_out) = (spec.input_width, spec.output_width);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new(-bound, bound).expect("bound is positive and finite");
            let data = (0..fan_in * fan_out).map(|_| dist.sample(&mut rng)).collect();
            LayerParams {
                weight: Matrix::from_vec(fan_out, fan_in, data).expect("shape matches"),
                bias: vec![0.0; fan_out],
                norm: spec.use_batch_norm.then(|| NormStats::fresh(fan_out)),
            }
        })
        .collect();
    Ok(NetworkWeights {
        specs: specs.to_vec(),
        layers,
        seed,
    })
}

impl NetworkWeights {
    /// Assembles weights from explicit parameters, checking every shape.
    pub fn from_parts(specs: Vec<LayerSpec>, layers: Vec<LayerParams>, seed: u64) -> Result<Self> {
        validate_specs(&specs)?;
        if specs.len() != layers.len() {
            return Err(Error::config(
                "layers",
                format!("{} specs but {} parameter sets", specs.len(), layers.len()),
            ));
        }
        for (i, (spec, layer)) in specs.iter().zip(&layers).enumerate() {
            if layer.weight.shape() != (spec.output_width, spec.input_width) {
                return Err(Error::config(
                    format!("layers[{i}].weight"),
                    format!(
                        "shape {:?} does not match spec {}x{}",
                        layer.weight.shape(),
                        spec.output_width,
                        spec.input_width
                    ),
                ));
            }
            if layer.bias.len() != spec.output_width {
                return Err(Error::config(
                    format!("layers[{i}].bias"),
                    "length does not match output width",
                ));
            }
            match (&layer.norm, spec.use_batch_norm) {
                (Some(norm), true) => {
                    if norm.running_mean.len() != spec.output_width || norm.running_var.len() != spec.output_width {
                        return Err(Error::config(
                            format!("layers[{i}].norm"),
                            "statistics length does not match output width",
                        ));
                    }
                    if norm.running_var.iter().any(|v| !(*v > 0.0)) {
                        return Err(Error::config(
                            format!("layers[{i}].norm.running_var"),
                            "variances must be positive",
                        ));
                    }
                }
                (None, false) => {}
                _ => {
                    return Err(Error::config(
                        format!("layers[{i}].norm"),
                        "normalization statistics must be present exactly when batch norm is on",
                    ))
                }
            }
            let finite = layer.weight.is_finite() && layer.bias.iter().all(|b| b.is_finite());
            if !finite {
                return Err(Error::config(format!("layers[{i}]"), "non-finite parameter"));
            }
        }
        Ok(Self { specs, layers, seed })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_width(&self) -> usize {
        self.specs[0].input_width
    }

    pub fn output_width(&self) -> usize {
        self.specs[self.specs.len() - 1].output_width
    }

    /// True when some layer behaves differently in Train and Eval mode.
    pub fn is_stochastic(&self) -> bool {
        self.specs.iter().any(LayerSpec::is_stochastic)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Mutable views of every trainable slice, in the order used by [`WeightGradient::slices`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for layer in &mut self.layers {
            out.push(layer.weight.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for layer in &self.layers {
            out.push(layer.weight.as_slice());
            out.push(layer.bias.as_slice());
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Gradient with the same shapes as the trainable part of [`NetworkWeights`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGradient {
    pub layers: Vec<LayerGradient>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl WeightGradient {
    pub fn zeros_like(weights: &NetworkWeights) -> Self {
        Self {
            layers: weights
                .layers()
                .iter()
                .map(|l| LayerGradient {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for layer in &self.layers {
            out.push(layer.weight.as_slice());
            out.push(layer.bias.as_slice());
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for layer in &mut self.layers {
            out.push(layer.weight.as_mut_slice());
            out.push(layer.bias.as_mut_slice());
        }
        out
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &WeightGradient) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }
}
