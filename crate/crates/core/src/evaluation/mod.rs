//! Train/test splitting, classification metrics and the per-model report tables.

mod auc;
mod experiment;
mod metrics;
mod report;
mod split;

pub use auc::{auc_counts, auc_roc};
pub use experiment::{
    derive_seed, run_experiment, run_grid, run_on_matrix, ExperimentConfig, ExperimentResult, ExperimentSeeds,
    ExperimentSummary, LeakageAudit, Prediction,
};
pub use metrics::{metrics, ClassMetrics, ConfusionMatrix, Metrics};
pub use report::{format_metric, write_predictions_csv, EvalReport, ReportCell};
pub use split::{split_80_20, split_stratified, train_size, SmoteMode, SplitPlan};
