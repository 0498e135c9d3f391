//! Mini-batch Adam training of the auto-encoders, convergence control and
//! the hyper-parameter grid search.

mod config;
mod grid;
mod loss;
mod train;

pub use config::{GridSpec, TrainConfig, GRID_KERNELS, GRID_LEARNING_RATES};
pub use grid::{grid_search, ncae_grid_search, select_best, CellOutcome, GridCell, GridResult};
pub use loss::{euclidean_loss, euclidean_loss_grad};
pub use train::{train, train_ncae, StopReason, TrainRecord};
