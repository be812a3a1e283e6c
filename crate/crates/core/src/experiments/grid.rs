use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lls::SIGMA_GRID;

/// Hyperparameter grid searched by a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Hidden-layer counts for the network models.
    pub layer_counts: Vec<usize>,
    /// Hidden-layer widths; every layer of an architecture has the same width.
    pub widths: Vec<usize>,
    /// Local linear smoother bandwidths.
    pub sigmas: Vec<f64>,
    /// Penalty strengths tried for the smoother network.
    pub lambdas: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::full()
    }
}

impl GridSpec {
    /// Layers {1, 3, 5} × widths {100, 300, 500}, σ ∈ {0.1, 1, 10, 100, 1000}, λ = 0.
    pub fn full() -> Self {
        Self {
            layer_counts: vec![1, 3, 5],
            widths: vec![100, 300, 500],
            sigmas: SIGMA_GRID.to_vec(),
            lambdas: vec![0.0],
        }
    }

    /// One hidden layer of width 100 or 300.
    pub fn reduced() -> Self {
        Self {
            layer_counts: vec![1],
            widths: vec![100, 300],
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_counts.is_empty() || self.widths.is_empty() {
            return Err(Error::config("grid", "layer counts and widths must be nonempty"));
        }
        if self.sigmas.is_empty() {
            return Err(Error::config("grid.sigmas", "must be nonempty"));
        }
        if self.lambdas.is_empty() {
            return Err(Error::config("grid.lambdas", "must be nonempty"));
        }
        if self.widths.contains(&0) {
            return Err(Error::config("grid.widths", "widths must be >= 1"));
        }
        if self.sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config("grid.sigmas", "bandwidths must be finite and > 0"));
        }
        if self.lambdas.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::config("grid.lambdas", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Hidden-layer lists in grid order (layer count outer, width inner).
    pub fn architectures(&self) -> Vec<Vec<usize>> {
        self.layer_counts
            .iter()
            .flat_map(|&l| self.widths.iter().map(move |&w| vec![w; l]))
            .collect()
    }
}
