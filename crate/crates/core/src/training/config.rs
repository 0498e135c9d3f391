use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning rates of the hyper-parameter grid.
pub const GRID_LEARNING_RATES: [f64; 6] = [5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5];
/// Kernel sizes of the hyper-parameter grid.
pub const GRID_KERNELS: [usize; 3] = [3, 5, 7];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub kernel: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without an improvement of at least `min_delta` before stopping.
    pub patience: usize,
    pub min_delta: f64,
    pub seed: u64,
    /// Reshuffle the training set every epoch.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            kernel: 3,
            batch_size: 16,
            max_epochs: 1000,
            patience: 20,
            min_delta: 1e-5,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    /// Accepts `learning_rate = 0` so tests can freeze the weights.
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("invalid learning rate {}", self.learning_rate)));
        }
        if self.kernel % 2 == 0 {
            return Err(Error::config(format!("kernel must be odd, got {}", self.kernel)));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be at least 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("patience must be at least 1"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs must be at least 1"));
        }
        if !(self.min_delta >= 0.0) {
            return Err(Error::config("min_delta must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub learning_rates: Vec<f64>,
    pub kernels: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            learning_rates: GRID_LEARNING_RATES.to_vec(),
            kernels: GRID_KERNELS.to_vec(),
        }
    }
}

impl GridSpec {
    /// Cells in row order: kernel-major, learning rates in the listed order.
    pub fn cells(&self) -> Vec<(usize, f64)> {
        self.kernels
            .iter()
            .flat_map(|&k| self.learning_rates.iter().map(move |&lr| (k, lr)))
            .collect()
    }
}
