//! Neural local smoother (NLS): a feed-forward network whose outputs are the
//! coefficients of a locally linear predictor, trained with an optional
//! smoothness penalty on those coefficients' input gradients.
//!
//! The crate also carries a Gaussian-kernel local linear smoother baseline,
//! ordinary least squares, explanation utilities, and the experiment harness
//! used by the `nls` command-line tool.

pub mod autodiff;
pub mod data;
pub mod error;
pub mod experiments;
pub mod interpret;
pub mod linalg;
pub mod lls;
pub mod nls;
pub mod seed;

pub use error::{Error, Result};
