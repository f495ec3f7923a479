//! Loss assembly, the dynamic pulling rule and the training loop.

mod dpm;
mod losses;
mod optim;
mod train;

pub use dpm::{manipulation_vector, select_gradient, update_delta, DpmCase, DpmState, DELTA_MAX, DELTA_MIN};
pub use losses::{compute_bundle, compute_losses, GradientBundle, LossReport};
pub use optim::{optimizer_step, Optimizer, OptimizerKind};
pub use train::{
    train, train_regression, validation_error, DpmParams, HistoryRow, Method, StopReason, TrainAbort,
    TrainOutcome, TrainerConfig, TrainingHistory,
};
