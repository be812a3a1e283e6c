//! Forward pass with optional forward-mode input tangents, recorded for a
//! reverse sweep.
//!
//! Rows are stacked: the first `B` rows of every intermediate matrix hold the
//! primal values of the batch, and block `j` (rows `B·(1+j) .. B·(2+j)`) holds
//! the derivative of those values with respect to input coordinate `j`. One GEMM
//! per layer then advances primal and tangents together. Reverse-mode through
//! the stacked pass differentiates any loss of both outputs and tangents with
//! respect to the weights, which is what the input-gradient penalty needs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layer::Activation;
use super::network::{LayerGradient, NetworkWeights, WeightGradient};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Added to variances before normalizing.
pub const BATCH_NORM_EPS: f64 = 1e-5;

/// Forward-pass semantics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Deterministic: no dropout, normalization with running statistics.
    Eval,
    /// Batch statistics for normalization; dropout masks drawn from `dropout_seed`.
    Train { dropout_seed: u64 },
}

struct BatchMoments {
    normalized: Matrix,
    mean: Vec<f64>,
    var: Vec<f64>,
}

struct NormRecord {
    inv_std: Vec<f64>,
    batch: Option<BatchMoments>,
}

struct LayerRecord {
    input: Matrix,
    pre: Matrix,
    norm: Option<NormRecord>,
    mask: Option<Vec<f64>>,
}

pub(crate) struct Tape {
    batch: usize,
    directions: usize,
    records: Vec<LayerRecord>,
    output: Matrix,
}

impl Tape {
    /// Runs the network on `inputs`. With `tangents`, each input coordinate is
    /// seeded as one tangent direction.
    pub(crate) fn run(weights: &NetworkWeights, inputs: &Matrix, mode: Mode, tangents: bool) -> Result<Tape> {
        let d_in = weights.input_width();
        if inputs.cols() != d_in {
            return Err(Error::input(format!(
                "batch has {} columns, network expects {d_in}",
                inputs.cols()
            )));
        }
        let b = inputs.rows();
        let directions = if tangents { d_in } else { 0 };
        let train = matches!(mode, Mode::Train { .. });
        if tangents && train && weights.is_stochastic() {
            return Err(Error::config(
                "mode",
                "input tangents through dropout or batch statistics are not supported; use Eval mode",
            ));
        }

        let mut stacked = Matrix::zeros((1 + directions) * b, d_in);
        stacked.as_mut_slice()[..b * d_in].copy_from_slice(inputs.as_slice());
        for j in 0..directions {
            for i in 0..b {
                stacked[((1 + j) * b + i, j)] = 1.0;
            }
        }

        let mut records = Vec::with_capacity(weights.layers().len());
        for (li, (spec, layer)) in weights.specs().iter().zip(weights.layers()).enumerate() {
            let n = spec.output_width;
            let primal_len = b * n;

            let mut pre = stacked.matmul_t(&layer.weight);
            for i in 0..b {
                for (v, bias) in pre.row_mut(i).iter_mut().zip(&layer.bias) {
                    *v += bias;
                }
            }

            let mut out = pre.clone();
            if spec.activation != Activation::Identity {
                let act = spec.activation;
                let o = out.as_mut_slice();
                let p = pre.as_slice();
                for idx in 0..primal_len {
                    o[idx] = act.value(p[idx]);
                }
                if directions > 0 {
                    let slope: Vec<f64> = p[..primal_len].iter().map(|&z| act.derivative(z)).collect();
                    for j in 0..directions {
                        let base = (1 + j) * primal_len;
                        for idx in 0..primal_len {
                            o[base + idx] = p[base + idx] * slope[idx];
                        }
                    }
                }
            }

            let norm = match (&layer.norm, spec.use_batch_norm) {
                (Some(stats), true) => Some(normalize(
                    &mut out,
                    b,
                    n,
                    &stats.running_mean,
                    &stats.running_var,
                    train,
                )),
                _ => None,
            };

            let mask = match mode {
                Mode::Train { dropout_seed } if spec.dropout_rate > 0.0 => {
                    let keep = 1.0 - spec.dropout_rate;
                    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
                    rng.set_stream(li as u64);
                    let mask: Vec<f64> = (0..primal_len)
                        .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    for (v, m) in out.as_mut_slice()[..primal_len].iter_mut().zip(&mask) {
                        *v *= m;
                    }
                    Some(mask)
                }
                _ => None,
            };

            if !out.is_finite() {
                return Err(Error::NonFiniteLayer { layer: li });
            }
            records.push(LayerRecord {
                input: stacked,
                pre,
                norm,
                mask,
            });
            stacked = out;
        }

        Ok(Tape {
            batch: b,
            directions,
            records,
            output: stacked,
        })
    }

    pub(crate) fn batch(&self) -> usize {
        self.batch
    }

    pub(crate) fn directions(&self) -> usize {
        self.directions
    }

    /// Stacked output: primal rows followed by one block per tangent direction.
    pub(crate) fn output(&self) -> &Matrix {
        &self.output
    }

    pub(crate) fn primal_output(&self) -> Matrix {
        self.output.row_block(0, self.batch)
    }

    pub(crate) fn tangent_output(&self, direction: usize) -> Matrix {
        let b = self.batch;
        self.output.row_block((1 + direction) * b, (2 + direction) * b)
    }

    /// Reverse sweep. `grad_output` has the shape of [`Tape::output`] and holds
    /// the loss derivative with respect to every primal and tangent output.
    pub(crate) fn backward(&self, weights: &NetworkWeights, grad_output: Matrix) -> WeightGradient {
        assert_eq!(grad_output.shape(), self.output.shape(), "gradient shape mismatch");
        let b = self.batch;
        let mut layers = Vec::with_capacity(self.records.len());
        let mut g = grad_output;

        for li in (0..self.records.len()).rev() {
            let rec = &self.records[li];
            let spec = &weights.specs()[li];
            let layer = &weights.layers()[li];
            let n = spec.output_width;
            let primal_len = b * n;

            if let Some(mask) = &rec.mask {
                for (v, m) in g.as_mut_slice()[..primal_len].iter_mut().zip(mask) {
                    *v *= m;
                }
            }

            if let Some(norm) = &rec.norm {
                match &norm.batch {
                    Some(moments) => {
                        // Batch statistics couple the primal rows; tangents never
                        // pass through this branch.
                        let bf = b as f64;
                        for u in 0..n {
                            let mut mean_g = 0.0;
                            let mut mean_gx = 0.0;
                            for i in 0..b {
                                mean_g += g[(i, u)];
                                mean_gx += g[(i, u)] * moments.normalized[(i, u)];
                            }
                            mean_g /= bf;
                            mean_gx /= bf;
                            for i in 0..b {
                                let xhat = moments.normalized[(i, u)];
                                g[(i, u)] = norm.inv_std[u] * (g[(i, u)] - mean_g - xhat * mean_gx);
                            }
                        }
                    }
                    None => {
                        for r in 0..g.rows() {
                            for (v, s) in g.row_mut(r).iter_mut().zip(&norm.inv_std) {
                                *v *= s;
                            }
                        }
                    }
                }
            }

            let gpre = if spec.activation == Activation::Identity {
                g
            } else {
                let act = spec.activation;
                let p = rec.pre.as_slice();
                let gs = g.as_slice();
                let mut gpre = Matrix::zeros(g.rows(), n);
                let out = gpre.as_mut_slice();
                let mut slope = vec![0.0; primal_len];
                let mut curvature = vec![0.0; primal_len];
                for idx in 0..primal_len {
                    slope[idx] = act.derivative(p[idx]);
                    curvature[idx] = act.second_derivative(p[idx]);
                    out[idx] = gs[idx] * slope[idx];
                }
                for j in 0..self.directions {
                    let base = (1 + j) * primal_len;
                    for idx in 0..primal_len {
                        let gt = gs[base + idx];
                        out[base + idx] = gt * slope[idx];
                        out[idx] += gt * p[base + idx] * curvature[idx];
                    }
                }
                gpre
            };

            let weight = gpre.t_matmul(&rec.input);
            let mut bias = vec![0.0; n];
            for i in 0..b {
                for (acc, v) in bias.iter_mut().zip(gpre.row(i)) {
                    *acc += v;
                }
            }
            layers.push(LayerGradient { weight, bias });

            if li == 0 {
                break;
            }
            g = gpre.matmul(&layer.weight);
        }

        layers.reverse();
        WeightGradient { layers }
    }

    /// Folds this pass's batch moments into the running statistics.
    pub(crate) fn update_running_stats(&self, weights: &mut NetworkWeights, momentum: f64) {
        let b = self.batch as f64;
        for (rec, layer) in self.records.iter().zip(weights.layers_mut()) {
            let (Some(norm), Some(stats)) = (&rec.norm, layer.norm.as_mut()) else {
                continue;
            };
            let Some(moments) = &norm.batch else {
                continue;
            };
            let unbias = if b > 1.0 { b / (b - 1.0) } else { 1.0 };
            for u in 0..stats.running_mean.len() {
                stats.running_mean[u] = (1.0 - momentum) * stats.running_mean[u] + momentum * moments.mean[u];
                stats.running_var[u] = (1.0 - momentum) * stats.running_var[u] + momentum * moments.var[u] * unbias;
            }
        }
    }
}

fn normalize(
    out: &mut Matrix,
    b: usize,
    n: usize,
    running_mean: &[f64],
    running_var: &[f64],
    train: bool,
) -> NormRecord {
    if train {
        let bf = b as f64;
        let mut mean = vec![0.0; n];
        let mut var = vec![0.0; n];
        for i in 0..b {
            for (m, v) in mean.iter_mut().zip(out.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= bf);
        for i in 0..b {
            for u in 0..n {
                var[u] += (out[(i, u)] - mean[u]).powi(2);
            }
        }
        var.iter_mut().for_each(|v| *v /= bf);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BATCH_NORM_EPS).sqrt()).collect();
        let mut normalized = Matrix::zeros(b, n);
        for i in 0..b {
            for u in 0..n {
                let x = (out[(i, u)] - mean[u]) * inv_std[u];
                normalized[(i, u)] = x;
                out[(i, u)] = x;
            }
        }
        NormRecord {
            inv_std,
            batch: Some(BatchMoments { normalized, mean, var }),
        }
    } else {
        let inv_std: Vec<f64> = running_var.iter().map(|v| 1.0 / (v + BATCH_NORM_EPS).sqrt()).collect();
        for r in 0..out.rows() {
            let primal = r < b;
            for (u, v) in out.row_mut(r).iter_mut().enumerate() {
                if primal {
                    *v = (*v - running_mean[u]) * inv_std[u];
                } else {
                    *v *= inv_std[u];
                }
            }
        }
        NormRecord { inv_std, batch: None }
    }
}
