//! The neural local smoother: regression and classification models built on
//! the differentiation engine, plus the plain-network baseline that shares
//! their trainer.

mod baseline;
mod classifier;
mod common;
mod config;
mod regressor;
mod trainer;

pub use baseline::NnModel;
pub use classifier::{softmax, NlsClassifier};
pub use common::{local_linear, TargetScale, MIN_TRAIN_ROWS};
pub use config::NlsConfig;
pub use regressor::{NlsModel, PenalizedLoss, MODEL_FORMAT_VERSION};
pub use trainer::{StopReason, TrainTrace};
