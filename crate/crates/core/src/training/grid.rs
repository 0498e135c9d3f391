use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::SequenceSplit;
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::scalar::Scalar;
use crate::training::{train_ncae, GridSpec, TrainConfig};

/// What one grid cell's run reports back.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellOutcome {
    pub auroc: f64,
    pub epochs: usize,
    pub train_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub kernel: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// `None` when the run failed numerically.
    pub auroc: Option<f64>,
    pub epochs: usize,
    pub train_seconds: f64,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    pub best: Option<usize>,
}

impl GridResult {
    pub fn best_cell(&self) -> Option<&GridCell> {
        self.best.map(|i| &self.cells[i])
    }

    /// `kernel,learning_rate,auroc`; a failed cell leaves `auroc` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kernel,learning_rate,auroc\n");
        for c in &self.cells {
            let auroc = c.auroc.map(|a| format!("{a:.6}")).unwrap_or_default();
            let _ = writeln!(out, "{},{:e},{auroc}", c.kernel, c.learning_rate);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Highest AUROC; ties go to the smaller kernel, then the larger learning rate.
pub fn select_best(cells: &[GridCell]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        let Some(a) = c.auroc else { continue };
        let better = match best.map(|b| &cells[b]) {
            None => true,
            Some(b) => {
                let ba = b.auroc.expect("best cell has an AUROC");
                a > ba
                    || (a == ba
                        && (c.kernel < b.kernel
                            || (c.kernel == b.kernel && c.learning_rate > b.learning_rate)))
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Runs every cell with seed `base_seed + index`.
///
/// A cell whose run fails numerically is recorded without an AUROC; any
/// other error aborts the sweep.
pub fn grid_search<F>(grid: &GridSpec, base_seed: u64, mut run: F) -> Result<GridResult>
where
    F: FnMut(usize, f64, u64) -> Result<CellOutcome>,
{
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::Empty("hyper-parameter grid is empty"));
    }
    let mut out = Vec::with_capacity(cells.len());
    for (i, (kernel, learning_rate)) in cells.into_iter().enumerate() {
        let seed = base_seed.wrapping_add(i as u64);
        let cell = match run(kernel, learning_rate, seed) {
            Ok(o) if o.auroc.is_finite() => GridCell {
                kernel,
                learning_rate,
                seed,
                auroc: Some(o.auroc),
                epochs: o.epochs,
                train_seconds: o.train_seconds,
                failure: None,
            },
            Ok(o) => GridCell {
                kernel,
                learning_rate,
                seed,
                auroc: None,
                epochs: o.epochs,
                train_seconds: o.train_seconds,
                failure: Some(format!("AUROC {}", o.auroc)),
            },
            Err(Error::Numerical(msg)) => GridCell {
                kernel,
                learning_rate,
                seed,
                auroc: None,
                epochs: 0,
                train_seconds: 0.0,
                failure: Some(msg),
            },
            Err(e) => return Err(e),
        };
        out.push(cell);
    }
    let best = select_best(&out);
    Ok(GridResult { cells: out, best })
}

/// Trains an NCAE for every cell on `split.train` and scores it on the test sets.
pub fn ncae_grid_search<T: Scalar>(split: &SequenceSplit<T>, grid: &GridSpec, base: &TrainConfig) -> Result<GridResult> {
    grid_search(grid, base.seed, |kernel, learning_rate, seed| {
        let cfg = TrainConfig {
            kernel,
            learning_rate,
            seed,
            ..base.clone()
        };
        let started = Instant::now();
        let (model, record) = train_ncae(&split.train, &cfg)?;
        let train_seconds = started.elapsed().as_secs_f64();
        let eval = evaluate(&model, &split.test_normal, &split.test_abnormal)?;
        Ok(CellOutcome {
            auroc: eval.auroc,
            epochs: record.final_epoch,
            train_seconds,
        })
    })
}
