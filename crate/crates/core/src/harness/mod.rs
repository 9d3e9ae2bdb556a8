//! Experiment orchestration: configuration, training runs across seeds,
//! evaluation rollouts, KPI reports and plot-ready tables.

pub mod config;
pub mod experiment;
pub mod plot;

pub use config::{DatasetSource, ExperimentConfig, RewardConfig, DEFAULT_SEEDS};
pub use experiment::{
    evaluate, evaluate_policy, policy_rollout, ramping_diagnostic, rbc_rollout, run_experiment, ConditionEcho,
    ConditionReport, Evaluation, ExperimentReport, RampingDiagnostic, RunFailure, RunRecord, ShapedDistrictEnv,
};
pub use plot::{emit_plot_data, missing_runs, seasonal_comfort, MonthlyComfort, PlotFiles};
