//! Seeded SGD training for both networks and the finite-difference gradient
//! checker used to validate every backward pass.

mod bfcn;
mod config;
pub mod gradcheck;
mod pnet;
mod report;
mod sgd;

pub use bfcn::{bfcn_batch_gradient, train_bfcn, train_bfcn_with, BfcnBatchLoss, BfcnSample};
pub use config::{TrainConfig, LR_BFCN_RAW_SCALE};
pub use gradcheck::{gradient_check, GradCheckReport, GradTarget};
pub use pnet::{parsing_accuracy, pnet_batch_gradient, train_pnet, train_pnet_with};
pub use report::{EpochRecord, TrainReport};
pub use sgd::{sgd_step, Sgd};
