//! Minimal differentiation engine for dense ELU networks.
//!
//! Forward-mode tangents give exact input Jacobians; a reverse sweep through the
//! tangent computation gives exact weight gradients of losses that penalize
//! those Jacobians.

mod adam;
mod dual;
mod layer;
mod network;
mod objective;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use dual::{forward, forward_with_input_jacobian, DualBatch};
pub use layer::{mlp_specs, validate_specs, Activation, LayerSpec};
pub use network::{
    init_weights, LayerGradient, LayerParams, NetworkWeights, NormStats, WeightGradient, WEIGHTS_FORMAT_VERSION,
};
pub use objective::{log_sum_exp, loss_gradient, loss_value, LossGradient, LossParts, Objective};
pub use tape::{Mode, BATCH_NORM_EPS};

pub(crate) use objective::loss_gradient_with_tape;
