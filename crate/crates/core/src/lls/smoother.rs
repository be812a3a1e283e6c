use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Standardization};
use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Matrix};
use crate::nls::local_linear;

/// Stabilizer added to the diagonal of the weighted normal equations.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Bandwidths searched by default.
pub const SIGMA_GRID: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];

/// `exp(−‖a − b‖² / σ²)`.
pub fn gaussian_kernel(a: &[f64], b: &[f64], sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if a.len() != b.len() {
        return Err(Error::input("kernel arguments differ in dimension"));
    }
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((-d2 / (sigma * sigma)).exp())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::config(
            "sigma",
            format!("bandwidth must be finite and > 0, got {sigma}"),
        ));
    }
    Ok(())
}

/// Local coefficients at one query: `theta = (θ_0, θ_1, …, θ_d)` in raw units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFit {
    pub theta: Vec<f64>,
    pub prediction: f64,
}

/// Local linear smoother. Each query solves a Gaussian-kernel weighted least
/// squares problem over the training set.
///
/// Distances and the regression itself use features standardized with the
/// training statistics; coefficients are reported in raw units.
#[derive(Debug, Clone, PartialEq)]
pub struct LlsModel {
    /// Standardized training features.
    inputs: Matrix,
    targets: Vec<f64>,
    stats: Standardization,
    sigma: f64,
    ridge: f64,
}

impl LlsModel {
    pub fn new(train: &Dataset, sigma: f64, ridge: f64) -> Result<Self> {
        check_sigma(sigma)?;
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::config("ridge", "must be finite and >= 0"));
        }
        if train.is_empty() {
            return Err(Error::input("local linear smoother needs training data"));
        }
        let stats = Standardization::fit_all(&train.features)?;
        Ok(Self {
            inputs: stats.transform(&train.features)?,
            targets: train.target.clone(),
            stats,
            sigma,
            ridge,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn stats(&self) -> &Standardization {
        &self.stats
    }

    /// Kernel weights of every training row for a standardized query.
    fn weights(&self, z: &[f64]) -> Vec<f64> {
        let inv = 1.0 / (self.sigma * self.sigma);
        (0..self.inputs.rows())
            .map(|j| {
                let d2: f64 = self.inputs.row(j).iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 * inv).exp()
            })
            .collect()
    }

    /// Solves `(ZᵀWZ + εI)β = ZᵀWy` with `Z = [1, standardized features]`.
    fn solve(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let n = self.inputs.rows();
        let p = self.dim() + 1;
        let mut scaled = Matrix::zeros(n, p);
        let mut rhs_rows = vec![0.0; n];
        for j in 0..n {
            let s = weights[j].sqrt();
            let row = scaled.row_mut(j);
            row[0] = s;
            for (r, z) in row[1..].iter_mut().zip(self.inputs.row(j)) {
                *r = s * z;
            }
            rhs_rows[j] = s * self.targets[j];
        }
        let mut gram = scaled.t_matmul(&scaled);
        for k in 0..p {
            gram[(k, k)] += self.ridge;
        }
        let rhs = scaled.transpose().matvec(&rhs_rows);
        cholesky_solve(&gram, &rhs).map_err(|_| {
            Error::Numeric(format!(
                "weighted normal equations are singular at sigma {}; use a ridge > 0",
                self.sigma
            ))
        })
    }

    /// Local coefficients and prediction at `query`.
    pub fn fit_predict(&self, query: &[f64]) -> Result<LocalFit> {
        if query.len() != self.dim() {
            return Err(Error::input(format!(
                "query has {} features, model expects {}",
                query.len(),
                self.dim()
            )));
        }
        let mut z = vec![0.0; self.dim()];
        self.stats.transform_row(query, &mut z);
        let beta = self.solve(&self.weights(&z))?;
        let theta = raw_coefficients(&beta, &self.stats);
        let prediction = local_linear(&theta, query);
        Ok(LocalFit { theta, prediction })
    }

    pub fn predict_batch(&self, features: &Matrix) -> Result<Vec<f64>> {
        (0..features.rows())
            .map(|r| self.fit_predict(features.row(r)).map(|f| f.prediction))
            .collect()
    }
}

/// Maps `β` over `[1, (x − μ)/s]` to `θ` over `[1, x]`.
pub(crate) fn raw_coefficients(beta: &[f64], stats: &Standardization) -> Vec<f64> {
    let mut theta = Vec::with_capacity(beta.len());
    let mut intercept = beta[0];
    for k in 0..stats.dim() {
        intercept -= beta[k + 1] * stats.means[k] / stats.stds[k];
    }
    theta.push(intercept);
    theta.extend((0..stats.dim()).map(|k| beta[k + 1] / stats.stds[k]));
    theta
}

/// Validation score of every bandwidth and the winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSelection {
    pub sigma: f64,
    /// `(σ, validation MSE)` in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// The grid bandwidth with the smallest validation MSE. Scores closer than
/// 1e-12 times the mean squared validation target count as ties, which go to
/// the smallest bandwidth.
pub fn select_sigma(train: &Dataset, grid: &[f64], validation: &Dataset, ridge: f64) -> Result<SigmaSelection> {
    if grid.is_empty() {
        return Err(Error::config("sigma_grid", "must not be empty"));
    }
    let mut scores = Vec::with_capacity(grid.len());
    for &sigma in grid {
        let model = LlsModel::new(train, sigma, ridge)?;
        let pred = model.predict_batch(&validation.features)?;
        let mse = pred
            .iter()
            .zip(&validation.target)
            .map(|(p, y)| (p - y) * (p - y))
            .sum::<f64>()
            / validation.len() as f64;
        scores.push((sigma, mse));
    }
    let scale = validation.target.iter().map(|y| y * y).sum::<f64>() / validation.len() as f64;
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let mut best = 0;
    for i in 1..scores.len() {
        let (s, m) = scores[i];
        let (bs, bm) = scores[best];
        let tie = (m - bm).abs() <= tol;
        if (!tie && m < bm) || (tie && s < bs) {
            best = i;
        }
    }
    Ok(SigmaSelection {
        sigma: scores[best].0,
        scores,
    })
}
