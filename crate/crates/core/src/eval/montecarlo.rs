use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of one train-and-evaluate run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub auroc: f64,
    pub train_seconds: f64,
    /// Mean wall-clock inference time per sequence.
    pub inference_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub aurocs: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator).
    pub sd: f64,
    pub mean_train_seconds: f64,
    pub mean_inference_seconds: f64,
}

impl MonteCarloReport {
    pub fn from_outcomes(seeds: Vec<u64>, outcomes: &[RunOutcome]) -> Result<Self> {
        if outcomes.len() < 2 {
            return Err(Error::config("need R ≥ 2 Monte Carlo runs"));
        }
        if seeds.len() != outcomes.len() {
            return Err(Error::shape("one seed per run"));
        }
        let n = outcomes.len() as f64;
        let aurocs: Vec<f64> = outcomes.iter().map(|o| o.auroc).collect();
        let mean = aurocs.iter().sum::<f64>() / n;
        let sd = (aurocs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        Ok(Self {
            runs: outcomes.len(),
            seeds,
            min: aurocs.iter().copied().fold(f64::INFINITY, f64::min),
            max: aurocs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            sd,
            aurocs,
            mean_train_seconds: outcomes.iter().map(|o| o.train_seconds).sum::<f64>() / n,
            mean_inference_seconds: outcomes.iter().map(|o| o.inference_seconds).sum::<f64>() / n,
        })
    }

    pub const CSV_HEADER: &'static str = "runs,min,max,mean,sd,mean_train_seconds,mean_inference_seconds";

    /// One CSV data row (no header).
    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.9}",
            self.runs,
            self.min,
            self.max,
            self.mean,
            self.sd,
            self.mean_train_seconds,
            self.mean_inference_seconds
        )
    }
}

/// `runs` independent runs seeded `base_seed + 1 ..= base_seed + runs`.
pub fn monte_carlo<F>(runs: usize, base_seed: u64, run: F) -> Result<MonteCarloReport>
where
    F: FnMut(u64) -> Result<RunOutcome>,
{
    if runs < 2 {
        return Err(Error::config("need R ≥ 2 Monte Carlo runs"));
    }
    let seeds = (1..=runs as u64).map(|i| base_seed.wrapping_add(i)).collect();
    monte_carlo_with_seeds(seeds, run)
}

pub fn monte_carlo_with_seeds<F>(seeds: Vec<u64>, mut run: F) -> Result<MonteCarloReport>
where
    F: FnMut(u64) -> Result<RunOutcome>,
{
    if seeds.len() < 2 {
        return Err(Error::config("need R ≥ 2 Monte Carlo runs"));
    }
    let outcomes = seeds.iter().map(|&s| run(s)).collect::<Result<Vec<_>>>()?;
    MonteCarloReport::from_outcomes(seeds, &outcomes)
}
