use serde::{Deserialize, Serialize};

use crate::eval::{MonteCarloReport, ScoredSequence, Threshold};

/// Everything an evaluation run produces, serialised as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub threshold: Option<Threshold<f64>>,
    pub n_normal: usize,
    pub n_abnormal: usize,
    /// Abnormal sequences flagged and normal sequences passed at `threshold`.
    pub true_positive_rate: Option<f64>,
    pub true_negative_rate: Option<f64>,
    pub train_seconds: f64,
    pub inference_seconds: f64,
    pub scores: Vec<ScoredSequence<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloReport>,
}
