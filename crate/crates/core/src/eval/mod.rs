//! Reconstruction-error scoring, AUROC, the decision threshold, Monte Carlo
//! summaries and error maps.

mod auroc;
mod errormap;
mod montecarlo;
mod report;
mod score;
mod threshold;

pub use auroc::{auroc, auroc_split};
pub use errormap::{error_map, to_gray8, write_matrix_csv, write_pgm, ERROR_MAP_FLOOR};
pub use montecarlo::{monte_carlo, monte_carlo_with_seeds, MonteCarloReport, RunOutcome};
pub use report::EvalReport;
pub use score::{batch_tensor, evaluate, Evaluation, sample_distances, score, score_batch, score_labeled, ScoredSequence, SCORE_CHUNK};
pub use threshold::{classify, tukey_threshold, tukey_threshold_with, Label, Threshold, TUKEY_MULTIPLIER};
