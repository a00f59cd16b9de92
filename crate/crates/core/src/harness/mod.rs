//! End-to-end runs: prep, recommend, resolve, evaluate, report.

mod cold_start;
mod manifest;
mod pipeline;
mod report;
mod stages;

pub use cold_start::{cold_start_filter, cold_start_users, truncate_histories};
pub use manifest::{
    ChatSpec, ColdStartMode, DatasetSpec, EvaluationSpec, ItemsFormat, LlmSpec, ModelSpec, RunManifest, Scenario,
    SplitSpec, TuningSpec,
};
pub use pipeline::{
    baseline_labels, build_context, evaluate_runs, id_lists, input_checksums, llm_request, load_catalog, open_session,
    prepare, run_baselines, run_llm, run_scenario, run_scenario_with, significance_matrix, BaselineRun, EvalContext,
    LlmRun, PreparedData, ScenarioRun,
};
pub use report::{
    emit_report, render_csv, render_markdown, render_significance_csv, EvaluationReport, ModelRow, PairTest,
    ReportFormat, MARKERS,
};
pub use stages::{all_stage, eval_stage, llm_stage, prep_stage, recommend_stage, report_stage, RunLayout};
