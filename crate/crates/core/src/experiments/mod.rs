//! Model comparison, λ sweeps and their reports.

mod compare;
mod grid;
mod metrics;
mod sweep;

pub use compare::{compare, CellScore, CompareOptions, ExperimentReport, ModelKind, ModelRow, Protocol};
pub use grid::GridSpec;
pub use metrics::{mse, residuals, Metrics, STANDARD_ERROR_DEFINITION};
pub use sweep::{sweep_lambda, write_theta_profile, Sweep, SweepOptions, SweepReport, SweepRow};
