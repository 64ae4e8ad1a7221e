//! Scenario drivers. Each returns report rows; asserted rows carry the
//! invariant they check in their note.

mod lemmas;
mod necessity;
mod scaling;
mod sparse;
mod structure;
mod weights;

use std::time::Instant;

pub use lemmas::run_pointwise_lemmas;
pub use necessity::run_ejem;
pub use scaling::{fitted_exponent, fitted_growth_exponent, predicted_exponent, run_apart_scaling};
pub use sparse::run_sparse;
pub use structure::{lattice_rows, run_comp_sparse, run_identities, run_lattice_check};
pub use weights::{appendix_configs, run_appendix, run_sawyer, run_weak_type, run_weight_traces};

use super::config::{ExperimentConfig, Scenario};
use super::report::ReportRow;
use crate::error::Result;

pub fn run_scenario(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    match cfg.scenario {
        Scenario::LatticeCheck => run_lattice_check(cfg),
        Scenario::Identities => run_identities(cfg),
        Scenario::CompSparse => run_comp_sparse(cfg),
        Scenario::Sparse => run_sparse(cfg),
        Scenario::WeightTraces => run_weight_traces(cfg),
        Scenario::Sawyer => run_sawyer(cfg),
        Scenario::Appendix => run_appendix(cfg),
        Scenario::WeakType => run_weak_type(cfg),
        Scenario::Ejem => run_ejem(cfg),
        Scenario::Apart => run_apart_scaling(cfg),
        Scenario::Lemmas => run_pointwise_lemmas(cfg),
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub(crate) fn rel_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Wall-clock row; measured only, since timings depend on the machine and profile.
pub(crate) fn check_time(scenario: &str, start: Instant, budget_secs: f64) -> ReportRow {
    ReportRow::measured(scenario, "runtime-seconds", start.elapsed().as_secs_f64())
        .with_note(format!("budget {budget_secs} s"))
}

/// Largest over smallest of the finite positive entries.
pub(crate) fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .filter(|v| v.is_finite() && *v > 0.0)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi == 0.0 {
        f64::NAN
    } else {
        hi / lo
    }
}
