use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use super::dataset::Dataset;
use crate::linalg::Matrix;

/// Variance of the additive Gaussian noise in [`gen_quadratic`].
pub const QUADRATIC_NOISE_VARIANCE: f64 = 8.6;

/// `n` points with `x ~ U[0, 2π]` and `y = sin(x)`, without noise.
pub fn gen_sin(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new(0.0, 2.0 * std::f64::consts::PI).expect("valid range");
    let x: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
    let y = x.iter().map(|v| v.sin()).collect();
    Dataset::unnamed(Matrix::from_vec(n, 1, x).expect("shape"), y).expect("finite")
}

/// `n` points with relevant `x ~ U[-5, 5]`, `y = x² + N(0, 8.6)` and
/// `n_irrelevant` extra columns drawn independently from `U[-5, 5]`.
pub fn gen_quadratic(n: usize, n_irrelevant: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = Uniform::new(-5.0, 5.0).expect("valid range");
    let noise = Normal::new(0.0, QUADRATIC_NOISE_VARIANCE.sqrt()).expect("valid sd");
    let d = 1 + n_irrelevant;
    let mut features = Matrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let row = features.row_mut(i);
        for v in row.iter_mut() {
            *v = uniform.sample(&mut rng);
        }
        y.push(row[0] * row[0] + noise.sample(&mut rng));
    }
    let mut names = vec![String::from("x")];
    names.extend((1..=n_irrelevant).map(|i| format!("noise{i}")));
    Dataset::new(features, y, names, "y").expect("finite")
}
