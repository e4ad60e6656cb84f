//! Metrics, complexity measures, timing and comparison runs.

pub mod ablation;
mod complexity;
pub mod family;
mod metrics;
pub mod synthetic;
pub mod timing;

pub use ablation::{ablation_table, run_ablation, AblationRow};
pub use complexity::{complexity, complexity_of_plan, ComplexityReport};
pub use family::depth_family;
pub use metrics::{auc, midranks, summarize_runs, MethodSummary, MetricError, RunOutcome, RunSummary};
pub use timing::{
    characterize_timing, linear_fit, plot_data_csv, timing_samples, LinearFit, TimingConfig, TimingRecord, TimingStudy,
};
