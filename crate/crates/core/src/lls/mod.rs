//! Classical baselines: the Gaussian-kernel local linear smoother and ordinary
//! least squares.

mod ols;
mod smoother;

pub use ols::OlsModel;
pub use smoother::{gaussian_kernel, select_sigma, LlsModel, LocalFit, SigmaSelection, DEFAULT_RIDGE, SIGMA_GRID};
