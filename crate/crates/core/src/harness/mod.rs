//! Run configuration, presets, metrics, ablation sweeps and report files.

mod ablation;
mod config;
mod metrics;
mod report;
pub mod svg;

pub use ablation::{parse_rows, run_ablation, AblationRow, AblationTable};
pub use config::{default_grid, RunConfig, PRESETS};
pub use metrics::{eval_on_grid, evaluate_with_truth, relative_l2, truth_on_grid, Grid, GridEvaluation, Truth};
pub use report::{
    emit_outputs, reference_for, run_experiment, write_errors_csv, ErrorReport, FailureInfo, StageSummary, Summary,
};
