//! Datasets: CSV ingestion, standardization, deterministic splits and the
//! synthetic generators used by the experiments.

mod dataset;
mod split;
mod standardize;
mod synthetic;

pub use dataset::{load_csv, read_csv, write_csv, Dataset};
pub use split::{make_split, Assignment, SplitPlan};
pub use standardize::{standardize, Standardization};
pub use synthetic::{gen_quadratic, gen_sin, QUADRATIC_NOISE_VARIANCE};
