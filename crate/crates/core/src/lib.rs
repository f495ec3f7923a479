//! Physics-informed neural networks trained with the dynamic pulling method.
//!
//! The crate is organised bottom-up:
//!
//! * [`diffnet`]: tanh networks that propagate `(u, u_x, u_t, u_xx)` jets and
//!   back-propagate parameter gradients through them.
//! * [`pdes`]: the four benchmark equations (residuals, initial and boundary data).
//! * [`sampling`]: training sets, collocation points and evaluation grids.
//! * [`trainer`]: loss assembly, the pulled-gradient rule, optimizers and the
//!   early-stopping training loop.
//! * [`refsolvers`]: classical reference solutions used for validation and testing.
//! * [`metrics`]: relative L2, explained variance, max and mean absolute error.

pub mod diffnet;
mod error;
pub mod metrics;
pub mod pdes;
pub mod refsolvers;
pub mod sampling;
pub mod trainer;

pub use diffnet::{FlatGradient, InputMap, Jet, JetBatch, JetField, LayerSpec, NetworkParams};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use pdes::{BoundaryKind, PdeId, PdeSpec};
pub use refsolvers::ReferenceSolution;
pub use sampling::{EvalGrid, Segment, TimeSplit, TrainSet};
pub use trainer::{
    DpmCase, DpmState, GradientBundle, LossReport, Method, OptimizerKind, TrainerConfig,
    TrainingHistory,
};
