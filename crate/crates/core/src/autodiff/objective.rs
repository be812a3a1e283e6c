//! The fixed loss shapes the engine differentiates.
//!
//! Every objective is a data term built on the network outputs plus an optional
//! input-gradient penalty `λ · mean_i Σ_{k,l} (∂out_k/∂x_l)²`, where the
//! derivatives come from Eval-mode tangents.

use super::network::{NetworkWeights, WeightGradient};
use super::tape::{Mode, Tape};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Data term of a loss.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// A constant, independent of the weights.
    Constant(f64),
    /// `mean_i (y_i − out_i)²` for a single-output network.
    SquaredError { targets: &'a [f64] },
    /// `mean_i (y_i − g_i)²` with the locally linear prediction
    /// `g_i = intercept + Σ_k out_{ik} · m_{ik}`.
    LocalLinear {
        multipliers: &'a Matrix,
        targets: &'a [f64],
        intercept: f64,
    },
    /// Cross-entropy of a softmax over per-class local linear scores. Class `c`
    /// owns output columns `c·d .. (c+1)·d`; its score is
    /// `intercepts[c] + Σ_k out_{i,c·d+k} · m_{ik}`.
    LocalLinearSoftmax {
        multipliers: &'a Matrix,
        labels: &'a [usize],
        intercepts: &'a [f64],
    },
}

impl Objective<'_> {
    fn scalar_count(&self) -> usize {
        match self {
            Objective::LocalLinear { .. } => 1,
            Objective::LocalLinearSoftmax { intercepts, .. } => intercepts.len(),
            _ => 0,
        }
    }

    fn validate(&self, batch: usize, output_width: usize) -> Result<()> {
        let check_rows = |rows: usize, what: &str| {
            if rows != batch {
                Err(Error::input(format!("{what} has {rows} rows, batch has {batch}")))
            } else {
                Ok(())
            }
        };
        match *self {
            Objective::Constant(_) => Ok(()),
            Objective::SquaredError { targets } => {
                check_rows(targets.len(), "targets")?;
                if output_width != 1 {
                    return Err(Error::config(
                        "objective",
                        "squared error needs a single-output network",
                    ));
                }
                Ok(())
            }
            Objective::LocalLinear {
                multipliers, targets, ..
            } => {
                check_rows(targets.len(), "targets")?;
                check_rows(multipliers.rows(), "multipliers")?;
                if multipliers.cols() != output_width {
                    return Err(Error::config(
                        "objective",
                        format!(
                            "local linear head pairs {} multipliers with {output_width} outputs",
                            multipliers.cols()
                        ),
                    ));
                }
                Ok(())
            }
            Objective::LocalLinearSoftmax {
                multipliers,
                labels,
                intercepts,
            } => {
                check_rows(labels.len(), "labels")?;
                check_rows(multipliers.rows(), "multipliers")?;
                let classes = intercepts.len();
                if classes < 2 || multipliers.cols() * classes != output_width {
                    return Err(Error::config(
                        "objective",
                        format!(
                            "softmax head needs {classes} x {} outputs, network has {output_width}",
                            multipliers.cols()
                        ),
                    ));
                }
                if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
                    return Err(Error::input(format!("label {bad} out of range for {classes} classes")));
                }
                Ok(())
            }
        }
    }
}

/// Value of a penalized loss, split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub data: f64,
    /// Mean squared Frobenius norm of the input Jacobian, when it was evaluated.
    pub penalty: Option<f64>,
}

/// Loss value with its gradient with respect to the network weights and to the
/// objective's free scalars (intercepts).
#[derive(Debug, Clone)]
pub struct LossGradient {
    pub parts: LossParts,
    pub weights: WeightGradient,
    pub scalars: Vec<f64>,
}

/// Evaluates the data term on primal outputs. Writes `∂data/∂out` into
/// `grad_out` (primal rows) and `∂data/∂scalars` into `grad_scalars` when given.
fn data_term(
    objective: &Objective<'_>,
    out: &Matrix,
    mut grad_out: Option<&mut Matrix>,
    grad_scalars: &mut [f64],
) -> Result<f64> {
    let b = out.rows();
    let bf = b as f64;
    match *objective {
        Objective::Constant(c) => Ok(c),
        Objective::SquaredError { targets } => {
            let mut sum = 0.0;
            for i in 0..b {
                let r = out[(i, 0)] - targets[i];
                if !r.is_finite() {
                    return Err(Error::NonFiniteLoss { index: i });
                }
                sum += r * r;
                if let Some(g) = grad_out.as_deref_mut() {
                    g[(i, 0)] = 2.0 * r / bf;
                }
            }
            Ok(sum / bf)
        }
        Objective::LocalLinear {
            multipliers,
            targets,
            intercept,
        } => {
            let mut sum = 0.0;
            let mut g_intercept = 0.0;
            for i in 0..b {
                let m = multipliers.row(i);
                let mut pred = intercept;
                for (o, x) in out.row(i).iter().zip(m) {
                    pred += o * x;
                }
                let r = pred - targets[i];
                if !r.is_finite() {
                    return Err(Error::NonFiniteLoss { index: i });
                }
                sum += r * r;
                let scale = 2.0 * r / bf;
                g_intercept += scale;
                if let Some(g) = grad_out.as_deref_mut() {
                    for (gv, x) in g.row_mut(i).iter_mut().zip(m) {
                        *gv = scale * x;
                    }
                }
            }
            if let Some(s) = grad_scalars.first_mut() {
                *s = g_intercept;
            }
            Ok(sum / bf)
        }
        Objective::LocalLinearSoftmax {
            multipliers,
            labels,
            intercepts,
        } => {
            let d = multipliers.cols();
            let classes = intercepts.len();
            let mut sum = 0.0;
            let mut scores = vec![0.0; classes];
            let mut probs = vec![0.0; classes];
            for i in 0..b {
                let m = multipliers.row(i);
                let row = out.row(i);
                for c in 0..classes {
                    let mut s = intercepts[c];
                    for (o, x) in row[c * d..(c + 1) * d].iter().zip(m) {
                        s += o * x;
                    }
                    scores[c] = s;
                }
                let log_norm = log_sum_exp(&scores);
                let nll = log_norm - scores[labels[i]];
                if !nll.is_finite() {
                    return Err(Error::NonFiniteLoss { index: i });
                }
                sum += nll;
                for c in 0..classes {
                    probs[c] = (scores[c] - log_norm).exp();
                }
                probs[labels[i]] -= 1.0;
                for c in 0..classes {
                    let gs = probs[c] / bf;
                    if let Some(s) = grad_scalars.get_mut(c) {
                        *s += gs;
                    }
                    if let Some(g) = grad_out.as_deref_mut() {
                        for (gv, x) in g.row_mut(i)[c * d..(c + 1) * d].iter_mut().zip(m) {
                            *gv = gs * x;
                        }
                    }
                }
            }
            Ok(sum / bf)
        }
    }
}

/// `log Σ exp(v)` without overflow.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Mean squared Frobenius norm of the tangent blocks of a tape's output.
fn penalty_value(tape: &Tape) -> f64 {
    let b = tape.batch();
    if b == 0 {
        return 0.0;
    }
    let out = tape.output().as_slice();
    let width = tape.output().cols();
    out[b * width..].iter().map(|v| v * v).sum::<f64>() / b as f64
}

/// Writes `λ · ∂penalty/∂tangent = 2λ·T/B` into the tangent rows of `grad`.
fn penalty_gradient(tape: &Tape, lambda: f64, grad: &mut Matrix) {
    let b = tape.batch();
    let width = tape.output().cols();
    let scale = 2.0 * lambda / b as f64;
    let src = &tape.output().as_slice()[b * width..];
    for (g, t) in grad.as_mut_slice()[b * width..].iter_mut().zip(src) {
        *g = scale * t;
    }
}

/// Value of `data + λ·penalty` in Eval mode, without gradients.
///
/// The penalty is evaluated when `with_penalty` is set or `λ > 0`.
pub fn loss_value(
    weights: &NetworkWeights,
    inputs: &Matrix,
    objective: &Objective<'_>,
    lambda: f64,
    with_penalty: bool,
) -> Result<LossParts> {
    objective.validate(inputs.rows(), weights.output_width())?;
    let need_penalty = with_penalty || lambda > 0.0;
    let tape = Tape::run(weights, inputs, Mode::Eval, need_penalty)?;
    let mut scratch = vec![0.0; objective.scalar_count()];
    let data = data_term(objective, &tape.primal_output(), None, &mut scratch)?;
    let penalty = need_penalty.then(|| penalty_value(&tape));
    Ok(LossParts {
        total: data + lambda * penalty.unwrap_or(0.0),
        data,
        penalty,
    })
}

/// Exact gradient of `data + λ·penalty` with respect to the weights.
///
/// The data term follows `mode`. The penalty always uses Eval-mode Jacobians;
/// when the network has dropout or batch normalization and `mode` is Train,
/// a second Eval pass supplies them, with running statistics held constant.
pub fn loss_gradient(
    weights: &NetworkWeights,
    inputs: &Matrix,
    objective: &Objective<'_>,
    lambda: f64,
    mode: Mode,
) -> Result<LossGradient> {
    loss_gradient_with_tape(weights, inputs, objective, lambda, mode).map(|(g, _)| g)
}

/// As [`loss_gradient`], also returning the data-term tape so a trainer can
/// refresh running normalization statistics from it.
pub(crate) fn loss_gradient_with_tape(
    weights: &NetworkWeights,
    inputs: &Matrix,
    objective: &Objective<'_>,
    lambda: f64,
    mode: Mode,
) -> Result<(LossGradient, Tape)> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::config(
            "lambda",
            format!("must be finite and >= 0, got {lambda}"),
        ));
    }
    objective.validate(inputs.rows(), weights.output_width())?;
    let with_penalty = lambda > 0.0;
    let separate_penalty = with_penalty && matches!(mode, Mode::Train { .. }) && weights.is_stochastic();

    let tape = Tape::run(weights, inputs, mode, with_penalty && !separate_penalty)?;
    let mut scalars = vec![0.0; objective.scalar_count()];
    let mut grad_out = Matrix::zeros(tape.output().rows(), tape.output().cols());
    let data = data_term(objective, &tape.primal_output(), Some(&mut grad_out), &mut scalars)?;

    let (penalty, weight_grad) = if separate_penalty {
        let mut grad = tape.backward(weights, grad_out);
        let eval = Tape::run(weights, inputs, Mode::Eval, true)?;
        let mut g_eval = Matrix::zeros(eval.output().rows(), eval.output().cols());
        penalty_gradient(&eval, lambda, &mut g_eval);
        grad.accumulate(&eval.backward(weights, g_eval));
        (Some(penalty_value(&eval)), grad)
    } else if with_penalty {
        penalty_gradient(&tape, lambda, &mut grad_out);
        (Some(penalty_value(&tape)), tape.backward(weights, grad_out))
    } else {
        (None, tape.backward(weights, grad_out))
    };

    let gradient = LossGradient {
        parts: LossParts {
            total: data + lambda * penalty.unwrap_or(0.0),
            data,
            penalty,
        },
        weights: weight_grad,
        scalars,
    };
    Ok((gradient, tape))
}
