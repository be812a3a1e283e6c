use super::network::NetworkWeights;
use super::tape::{Mode, Tape};
use crate::error::Result;
use crate::linalg::Matrix;

/// Network outputs for a batch together with their derivatives along every
/// input coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBatch {
    primal: Matrix,
    tangents: Vec<Matrix>,
}

impl DualBatch {
    /// `batch × output_width` outputs.
    pub fn primal(&self) -> &Matrix {
        &self.primal
    }

    /// Derivative of the outputs with respect to input coordinate `direction`.
    pub fn tangent(&self, direction: usize) -> &Matrix {
        &self.tangents[direction]
    }

    pub fn directions(&self) -> usize {
        self.tangents.len()
    }

    /// `output_width × d` Jacobian of instance `i`.
    pub fn jacobian(&self, i: usize) -> Matrix {
        Matrix::from_fn(self.primal.cols(), self.tangents.len(), |k, l| self.tangents[l][(i, k)])
    }

    /// Squared Frobenius norm of instance `i`'s Jacobian.
    pub fn jacobian_norm_sq(&self, i: usize) -> f64 {
        self.tangents
            .iter()
            .map(|t| t.row(i).iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

/// Evaluates the network on a batch (`rows × input_width`).
pub fn forward(weights: &NetworkWeights, batch: &Matrix, mode: Mode) -> Result<Matrix> {
    Ok(Tape::run(weights, batch, mode, false)?.primal_output())
}

/// Eval-mode outputs and their exact input Jacobians.
pub fn forward_with_input_jacobian(weights: &NetworkWeights, batch: &Matrix) -> Result<(Matrix, DualBatch)> {
    let tape = Tape::run(weights, batch, Mode::Eval, true)?;
    let primal = tape.primal_output();
    let tangents = (0..tape.directions()).map(|j| tape.tangent_output(j)).collect();
    Ok((primal.clone(), DualBatch { primal, tangents }))
}
