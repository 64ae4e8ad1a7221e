//! Theorem-level experiments, their configuration and CSV reports.

pub mod config;
pub mod report;
mod scenarios;
mod suite;

pub use config::{parse_matrix, ExperimentConfig, GridSettings, Scenario, Tolerances};
pub use report::{all_passed, emit_report, render_report, sorted_rows, ReportRow, Status};
pub use scenarios::{
    appendix_configs, fitted_exponent, fitted_growth_exponent, lattice_rows, predicted_exponent, run_apart_scaling, run_appendix, run_comp_sparse, run_ejem,
    run_identities, run_lattice_check, run_pointwise_lemmas, run_sawyer, run_scenario, run_sparse, run_weak_type,
    run_weight_traces,
};
pub use suite::{test_suite, TestFunction, TestKind, DEFAULT_SUITE_SIZE};
