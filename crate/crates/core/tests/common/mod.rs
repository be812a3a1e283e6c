//! Oracles and fixtures shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::path::PathBuf;

use nls_core::autodiff::{forward, init_weights, LayerSpec, Mode, NetworkWeights, WeightGradient};
use nls_core::data::{load_csv, Dataset};
use nls_core::linalg::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

/// Randomizes biases too, so activations straddle the ELU kink.
pub fn random_net(specs: &[LayerSpec], seed: u64) -> NetworkWeights {
    let mut w = init_weights(specs, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    for layer in w.layers_mut() {
        for b in &mut layer.bias {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    w
}

pub fn perturbed(w: &NetworkWeights, dir: &[Vec<f64>], h: f64) -> NetworkWeights {
    let mut out = w.clone();
    for (slice, d) in out.param_slices_mut().into_iter().zip(dir) {
        for (p, v) in slice.iter_mut().zip(d) {
            *p += h * v;
        }
    }
    out
}

pub fn random_direction(w: &NetworkWeights, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    w.param_slices()
        .iter()
        .map(|s| (0..s.len()).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

pub fn directional(g: &WeightGradient, dir: &[Vec<f64>]) -> f64 {
    g.slices()
        .iter()
        .zip(dir)
        .map(|(s, d)| s.iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub fn fd_jacobian(w: &NetworkWeights, x: &[f64], h: f64) -> Matrix {
    let d = x.len();
    let out_w = w.output_width();
    let mut jac = Matrix::zeros(out_w, d);
    for l in 0..d {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[l] += h;
        minus[l] -= h;
        let fp = forward(w, &Matrix::from_rows(&[plus]).unwrap(), Mode::Eval).unwrap();
        let fm = forward(w, &Matrix::from_rows(&[minus]).unwrap(), Mode::Eval).unwrap();
        for k in 0..out_w {
            jac[(k, l)] = (fp[(0, k)] - fm[(0, k)]) / (2.0 * h);
        }
    }
    jac
}

/// Norm-wise relative error. The denominator is floored at 1e-4 because central
/// differences of O(1) outputs carry ~1e-11 roundoff, which swamps tiny Jacobians
/// deep in ELU's saturated region.
pub fn jacobian_rel_err(exact: &Matrix, approx: &Matrix) -> f64 {
    let diff: f64 = exact
        .as_slice()
        .iter()
        .zip(approx.as_slice())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    diff / exact.frobenius_sq().sqrt().max(1e-4)
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Column means and population standard deviations (1 for constant columns).
pub fn column_moments(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for c in 0..x.cols() {
        let col = x.column(c);
        let m = col.iter().sum::<f64>() / n;
        let s = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
        means.push(m);
        stds.push(if s <= 1e-12 * (1.0 + m.abs()) { 1.0 } else { s });
    }
    (means, stds)
}

/// Local linear fit at `query` written out directly: standardize with the
/// training moments, accumulate weighted normal equations term by term, add the
/// ridge and solve, then map back to raw units. Returns `(θ, prediction)`.
pub fn lls_oracle(x: &Matrix, y: &[f64], sigma: f64, ridge: f64, query: &[f64]) -> (Vec<f64>, f64) {
    let (means, stds) = column_moments(x);
    let d = x.cols();
    let p = d + 1;
    let zq: Vec<f64> = (0..d).map(|k| (query[k] - means[k]) / stds[k]).collect();
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for i in 0..x.rows() {
        let mut z = vec![1.0];
        z.extend((0..d).map(|k| (x[(i, k)] - means[k]) / stds[k]));
        let dist2: f64 = (0..d).map(|k| (z[k + 1] - zq[k]).powi(2)).sum();
        let w = (-dist2 / (sigma * sigma)).exp();
        for r in 0..p {
            for c in 0..p {
                a[r][c] += w * z[r] * z[c];
            }
            b[r] += w * z[r] * y[i];
        }
    }
    for (r, row) in a.iter_mut().enumerate() {
        row[r] += ridge;
    }
    let beta = gauss_solve(a, b);
    let mut theta = vec![beta[0] - (0..d).map(|k| beta[k + 1] * means[k] / stds[k]).sum::<f64>()];
    theta.extend((0..d).map(|k| beta[k + 1] / stds[k]));
    let pred = theta[0] + (0..d).map(|k| theta[k + 1] * query[k]).sum::<f64>();
    (theta, pred)
}

/// Unregularized least squares on `[1, x]` in raw units via the normal equations.
pub fn ols_oracle(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let p = x.cols() + 1;
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for i in 0..x.rows() {
        let mut z = vec![1.0];
        z.extend_from_slice(x.row(i));
        for r in 0..p {
            for c in 0..p {
                a[r][c] += z[r] * z[c];
            }
            b[r] += z[r] * y[i];
        }
    }
    gauss_solve(a, b)
}

pub fn linear_predict(theta: &[f64], x: &[f64]) -> f64 {
    theta[0] + theta[1..].iter().zip(x).map(|(t, v)| t * v).sum::<f64>()
}

/// `y = 1.5 + 2x_1 − 0.5x_2 + N(0, noise²)` on `U[−3, 3]²`.
pub fn linear_data(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = Normal::new(0.0, noise).unwrap();
    let x = random_matrix(&mut rng, n, 2, 3.0);
    let y = (0..n)
        .map(|i| 1.5 + 2.0 * x[(i, 0)] - 0.5 * x[(i, 1)] + eps.sample(&mut rng))
        .collect();
    Dataset::unnamed(x, y).unwrap()
}

/// Two unit-variance Gaussian blobs centred at ±(2, 2) with labels 1 and 0.
pub fn blobs(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = if i % 2 == 0 { 2.0 } else { -2.0 };
        rows.push([c + unit.sample(&mut rng), c + unit.sample(&mut rng)]);
        labels.push(if c > 0.0 { 1.0 } else { 0.0 });
    }
    Dataset::unnamed(Matrix::from_rows(&rows).unwrap(), labels).unwrap()
}

pub fn boston_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/boston.csv")
}

pub fn boston() -> Dataset {
    load_csv(boston_path(), "MEDV").unwrap()
}

/// A model whose every weight is zero and whose output bias is `theta`, so its
/// slopes are the same at every input.
pub fn constant_model(train: &Dataset, theta: &[f64], intercept: f64) -> nls_core::nls::NlsModel {
    use nls_core::autodiff::mlp_specs;
    use nls_core::data::Standardization;
    use nls_core::nls::{NlsConfig, NlsModel, TargetScale};
    let d = train.dim();
    let mut weights = init_weights(&mlp_specs(d, &[3], d, false, 0.0), 0).unwrap();
    for layer in weights.layers_mut() {
        layer.weight.as_mut_slice().fill(0.0);
    }
    weights.layers_mut().last_mut().unwrap().bias = theta.to_vec();
    let stats = Standardization::fit_all(&train.features).unwrap();
    NlsModel::from_parts(
        weights,
        intercept,
        stats,
        TargetScale::fit(&train.target),
        NlsConfig::default(),
    )
    .unwrap()
}

/// Newton's method for one-feature logistic regression; returns `(b, w)`.
pub fn logistic_oracle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut b, mut w) = (0.0, 0.0);
    for _ in 0..100 {
        let (mut gb, mut gw, mut hbb, mut hbw, mut hww) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&xi, &yi) in x.iter().zip(y) {
            let p = 1.0 / (1.0 + (-(b + w * xi)).exp());
            gb += p - yi;
            gw += (p - yi) * xi;
            let s = p * (1.0 - p);
            hbb += s;
            hbw += s * xi;
            hww += s * xi * xi;
        }
        let det = hbb * hww - hbw * hbw;
        b -= (hww * gb - hbw * gw) / det;
        w -= (hbb * gw - hbw * gb) / det;
    }
    (b, w)
}
