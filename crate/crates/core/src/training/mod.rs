//! Adam, the composite residual loss and the stagewise boosting loop.

mod adam;
mod boost;
mod ensemble;
mod loss;
mod objective;
mod plan;

pub use adam::{lr_at, AdamState, OptimizerConfig};
pub use boost::{run_boosting, train_stage, BoostingRun, Observer, StageReport, StageTrace, TraceRecord};
pub use ensemble::{Ensemble, Stage};
pub use loss::{derive_seed, pinn_loss, pinn_loss_and_grad, CollocationData};
pub use objective::{StageObjective, DEFAULT_CHUNK};
pub use plan::{rho_schedule, BatchSizes, LossWeights, StageConfig, StagePlan};
