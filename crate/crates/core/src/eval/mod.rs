//! Ground-truth scoring, raw-versus-reduced comparison runs, synthetic
//! scenarios, and plot-ready report files.

pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod scenario;

pub use metrics::{correct_link_count, ComparisonReport, RunMetrics};
pub use pipeline::{
    default_eps_values, eps_sweep, run_pipeline, EpsSweepRow, PipelineParams, PipelineRun,
    DEFAULT_REPETITIONS,
};
pub use report::{export_report, read_report, strip_timing, PipelineSummary};
pub use scenario::{
    generate_scenario, generate_scenario_with, DwellSpec, ScenarioParams, SyntheticScenario,
};
