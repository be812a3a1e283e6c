//! Explanations of individual predictions, the average squared gradient
//! smoothness metric, and extension of explanations to nearby instances.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lls::LlsModel;
use crate::nls::{local_linear, NlsModel};

/// Why one instance received its prediction: `prediction = intercept + Σ contributions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub instance: Vec<f64>,
    pub intercept: f64,
    /// Raw-unit slopes `θ_1(x)..θ_d(x)`.
    pub coefficients: Vec<f64>,
    /// `θ_i(x)·x_i`.
    pub contributions: Vec<f64>,
    pub prediction: f64,
    pub feature_names: Vec<String>,
}

impl Explanation {
    fn from_theta(theta: &[f64], x: &[f64], feature_names: Vec<String>) -> Self {
        let coefficients = theta[1..].to_vec();
        let contributions = coefficients.iter().zip(x).map(|(t, v)| t * v).collect();
        Explanation {
            instance: x.to_vec(),
            intercept: theta[0],
            coefficients,
            contributions,
            prediction: local_linear(theta, x),
            feature_names,
        }
    }

    /// `intercept + Σ contributions`, accumulated in feature order.
    pub fn total(&self) -> f64 {
        self.contributions.iter().fold(self.intercept, |acc, c| acc + c)
    }

    /// Aligned-column table.
    pub fn to_text(&self) -> String {
        let width = self
            .feature_names
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max("intercept".len());
        let mut out = String::new();
        writeln!(
            out,
            "{:<width$}  {:>14}  {:>14}  {:>14}",
            "feature", "value", "coefficient", "contribution"
        )
        .unwrap();
        writeln!(
            out,
            "{:<width$}  {:>14}  {:>14}  {:>14.6}",
            "intercept", "", "", self.intercept
        )
        .unwrap();
        for i in 0..self.coefficients.len() {
            writeln!(
                out,
                "{:<width$}  {:>14.6}  {:>14.6}  {:>14.6}",
                self.feature_names[i], self.instance[i], self.coefficients[i], self.contributions[i]
            )
            .unwrap();
        }
        writeln!(
            out,
            "{:<width$}  {:>14}  {:>14}  {:>14.6}",
            "prediction", "", "", self.prediction
        )
        .unwrap();
        out
    }
}

/// Explanation of an NLS prediction at `x`.
pub fn explain(model: &NlsModel, x: &[f64]) -> Result<Explanation> {
    let theta = model.theta(x)?;
    Ok(Explanation::from_theta(&theta, x, model.feature_names().to_vec()))
}

/// Explanation of a local linear smoother prediction from its local coefficients.
pub fn explain_lls(model: &LlsModel, x: &[f64], feature_names: Vec<String>) -> Result<Explanation> {
    if feature_names.len() != model.dim() {
        return Err(Error::input("one feature name per column required"));
    }
    let fit = model.fit_predict(x)?;
    Ok(Explanation::from_theta(&fit.theta, x, feature_names))
}

/// Mean over `data` of `Σ_{k,l} (∂θ_k/∂z_l)²`: the penalty term of the model's
/// objective, evaluated by the same code.
pub fn avg_squared_gradient(model: &NlsModel, data: &Dataset) -> Result<f64> {
    Ok(model.penalized_loss(data, 0.0)?.penalty)
}

/// Outcome of predicting one extension instance with its neighbour's coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionRow {
    /// Index into the prediction set of the nearest explained instance.
    pub neighbor: usize,
    /// `θ_0 + Σ θ_k(x_neighbor)·x_k`.
    pub extended: f64,
    /// `θ_0 + Σ θ_k(x)·x_k`.
    pub truth: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub rows: Vec<ExtensionRow>,
    pub mean_gap: f64,
}

impl ExtensionReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "{:>6}  {:>8}  {:>14}  {:>14}  {:>12}",
            "row", "neighbor", "extended", "true", "gap"
        )
        .unwrap();
        for (i, r) in self.rows.iter().enumerate() {
            writeln!(
                out,
                "{:>6}  {:>8}  {:>14.6}  {:>14.6}  {:>12.4e}",
                i, r.neighbor, r.extended, r.truth, r.gap
            )
            .unwrap();
        }
        writeln!(out, "mean gap {:.6e}", self.mean_gap).unwrap();
        out
    }
}

/// Predicts every extension instance with the coefficients explained at its
/// nearest prediction instance (standardized Euclidean distance, lowest index on
/// ties) and compares with the model's own prediction there.
pub fn extend_predictions(
    model: &NlsModel,
    prediction_set: &Matrix,
    extension_set: &Matrix,
) -> Result<ExtensionReport> {
    if prediction_set.rows() == 0 {
        return Err(Error::input("prediction set is empty"));
    }
    if extension_set.rows() == 0 {
        return Err(Error::input("extension set is empty"));
    }
    let stats = model.input_stats();
    let zp = stats.transform(prediction_set)?;
    let ze = stats.transform(extension_set)?;
    let theta_p = model.theta_batch(prediction_set)?;
    let theta_e = model.theta_batch(extension_set)?;

    let mut rows = Vec::with_capacity(extension_set.rows());
    for i in 0..extension_set.rows() {
        let mut neighbor = 0;
        let mut best = f64::INFINITY;
        for j in 0..zp.rows() {
            let d2: f64 = ze.row(i).iter().zip(zp.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 < best {
                best = d2;
                neighbor = j;
            }
        }
        let x = extension_set.row(i);
        let extended = local_linear(theta_p.row(neighbor), x);
        let truth = local_linear(theta_e.row(i), x);
        rows.push(ExtensionRow {
            neighbor,
            extended,
            truth,
            gap: (extended - truth).abs(),
        });
    }
    let mean_gap = rows.iter().map(|r| r.gap).sum::<f64>() / rows.len() as f64;
    Ok(ExtensionReport { rows, mean_gap })
}
