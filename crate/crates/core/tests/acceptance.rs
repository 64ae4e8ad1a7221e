//! Acceptance run: every criterion at its stated tolerance, one line each.
//!
//! Exits 0 after printing the table so it can sit inside `cargo test`; set
//! `ACCEPTANCE_STRICT=1` to turn any failing criterion into a nonzero exit.

use std::time::Instant;

use rough_weights::geometry::LinearMap;
use rough_weights::verify::{run_scenario, ExperimentConfig, ReportRow, Scenario, Status};
use rough_weights::weights::WeightRecipe;
use rough_weights::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn rows_of(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    run_scenario(cfg)
}

fn find<'a>(rows: &'a [ReportRow], quantity: &str) -> Option<&'a ReportRow> {
    rows.iter().find(|r| r.quantity == quantity)
}

fn asserted_ok(rows: &[ReportRow], keep: impl Fn(&ReportRow) -> bool) -> (usize, usize) {
    let picked: Vec<&ReportRow> = rows.iter().filter(|r| r.status != Status::Measured && keep(r)).collect();
    (picked.iter().filter(|r| r.status == Status::Pass).count(), picked.len())
}

fn fmt_time(secs: f64, budget: f64) -> String {
    format!("{secs:.2} s of {budget} s")
}

fn lattice() -> Result<Outcome> {
    let rows = rows_of(&ExperimentConfig::preset(Scenario::LatticeCheck))?;
    let failures: f64 = rows.iter().filter(|r| r.quantity.ends_with("/failures")).map(|r| r.value).sum();
    Ok(Outcome {
        pass: failures == 0.0,
        detail: format!("{failures} failures over n=1 depth 6 and n=2 depth 4"),
    })
}

fn identities() -> Result<Outcome> {
    let rows = rows_of(&ExperimentConfig::preset(Scenario::Identities))?;
    let worst = rows.iter().filter(|r| r.target.is_some()).map(|r| r.value).fold(0.0, f64::max);
    let (ok, total) = asserted_ok(&rows, |_| true);
    Ok(Outcome {
        pass: ok == total && total > 0,
        detail: format!("{ok}/{total} identity rows, worst relative gap {worst:.2e} (<= 1e-12)"),
    })
}

fn comp_sparse() -> Result<Outcome> {
    let rows = rows_of(&ExperimentConfig::preset(Scenario::CompSparse))?;
    let r = find(&rows, "max-relative-deviation").expect("deviation row");
    let pairs = find(&rows, "pairs").map_or(0.0, |r| r.value);
    Ok(Outcome {
        pass: r.status == Status::Pass && pairs >= 50.0,
        detail: format!("max deviation {:.2e} over {pairs} pairs", r.value),
    })
}

fn sparse_configs() -> Vec<(&'static str, ExperimentConfig)> {
    let reflection = ExperimentConfig::preset(Scenario::Sparse);
    let mut dilations = ExperimentConfig::preset(Scenario::Sparse);
    dilations.matrices = vec![
        LinearMap::scalar(1, 2, 1).expect("map"),
        LinearMap::scalar(1, 1, 2).expect("map"),
    ];
    vec![("{-I, I}", reflection), ("{diag 2, diag 1/2}", dilations)]
}

fn sparse(runs: &[(&str, Vec<ReportRow>)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, rows) in runs {
        let get = |q: &str| find(rows, q).expect("sparse row");
        let cert = get("certified-functions");
        let stop = get("stopping-min-witness-ratio");
        let spread = get("constant-spread");
        let slow = get("slowest-function-seconds").value;
        let ok = [cert, stop, spread].iter().all(|r| r.status == Status::Pass) && slow < 60.0;
        pass &= ok;
        parts.push(format!(
            "{label}: {} certified, witness ratio {:.3}, spread {:.2} (<= 10), slowest {slow:.2} s",
            cert.value, stop.value, spread.value
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn cz(runs: &[(&str, Vec<ReportRow>)]) -> Outcome {
    let mut pass = true;
    let mut total = 0.0;
    let mut failures = 0.0;
    for (_, rows) in runs {
        for q in ["cz-packing-failures", "cz-selection-failures"] {
            let r = find(rows, q).expect("cz row");
            failures += r.value;
            pass &= r.status == Status::Pass;
        }
        total += find(rows, "cz-runs").map_or(0.0, |r| r.value);
    }
    Outcome {
        pass,
        detail: format!("{failures} packing or selection failures over {total} decompositions"),
    }
}

fn weight_traces() -> Result<Outcome> {
    let rows = rows_of(&ExperimentConfig::preset(Scenario::WeightTraces))?;
    let (ok, total) = asserted_ok(&rows, |r| r.quantity.ends_with("/verdict"));
    let verdicts: Vec<String> = rows
        .iter()
        .filter(|r| r.quantity.ends_with("/verdict"))
        .map(|r| format!("{} x{:.2}", r.quantity.trim_end_matches("/verdict"), r.value))
        .collect();
    Ok(Outcome {
        pass: ok == total && total > 0,
        detail: format!("{ok}/{total} verdicts as expected ({})", verdicts.join(", ")),
    })
}

fn sawyer_configs() -> Vec<ExperimentConfig> {
    let base = ExperimentConfig::preset(Scenario::Sawyer);
    let mut unweighted = base.clone();
    unweighted.weight = WeightRecipe::Constant(1.0);
    unweighted.alpha = 0.0;
    let mut dilation = base.clone();
    dilation.matrices = vec![LinearMap::scalar(1, 2, 1).expect("map")];
    let mut negative = base.clone();
    negative.weight = WeightRecipe::power(-0.3);
    negative.p = 3.0;
    let mut plane = base.clone();
    plane.grid.n = 2;
    plane.grid.j = 1;
    plane.grid.l = 3;
    plane.grid.levels = vec![3, 4, 5];
    plane.alpha = 0.5;
    plane.matrices = vec![LinearMap::from_pairs(2, &[(0, 1), (1, 1), (1, 1), (0, 1)]).expect("swap")];
    vec![base, unweighted, dilation, negative, plane]
}

fn sawyer() -> Result<Outcome> {
    let mut testing = (0, 0);
    let mut ordering = (0, 0);
    for cfg in sawyer_configs() {
        let rows = rows_of(&cfg)?;
        let t = asserted_ok(&rows, |r| r.quantity.ends_with("/testing-vs-strong"));
        let o = asserted_ok(&rows, |r| r.quantity.ends_with("/apq-vs-testing"));
        testing = (testing.0 + t.0, testing.1 + t.1);
        ordering = (ordering.0 + o.0, ordering.1 + o.1);
    }
    Ok(Outcome {
        pass: testing.0 == testing.1 && ordering.0 == ordering.1 && testing.1 > 0 && ordering.1 > 0,
        detail: format!(
            "testing <= strong on {}/{} configs, class constant <= testing constant on {}/{} matched configs",
            testing.0, testing.1, ordering.0, ordering.1
        ),
    })
}

fn appendix() -> Result<Outcome> {
    let rows = rows_of(&ExperimentConfig::preset(Scenario::Appendix))?;
    let (ok, total) = asserted_ok(&rows, |_| true);
    let recorded = rows.iter().filter(|r| r.quantity.ends_with("/propAp-ii")).count();
    let configs = rows.iter().filter(|r| r.quantity.ends_with("/prop-detA")).count();
    Ok(Outcome {
        pass: ok == total && configs == 12 && recorded > 0,
        detail: format!("{ok}/{total} property rows over {configs} configs, {recorded} propAp-ii ratios recorded"),
    })
}

fn necessity() -> Result<Outcome> {
    let cfg = ExperimentConfig::preset(Scenario::Ejem);
    let rows = rows_of(&cfg)?;
    // in-range members of the sweep: the necessity rows; every member: the lower constant
    let in_range: Vec<String> = cfg.sweep.iter().filter(|b| b.abs() < 0.5).map(|b| format!("beta={b}/")).collect();
    let (nec_ok, nec_total) =
        asserted_ok(&rows, |r| r.quantity.ends_with("/necessity") && in_range.iter().any(|p| r.quantity.starts_with(p)));
    let (pos_ok, pos_total) = asserted_ok(&rows, |r| r.quantity.ends_with("/lower-constant-positive"));
    let variation = rows
        .iter()
        .filter(|r| r.quantity.ends_with("/lower-constant-variation"))
        .map(|r| r.value)
        .fold(0.0, f64::max);
    let cmin = rows
        .iter()
        .filter(|r| r.quantity.ends_with("/lower-constant-positive"))
        .map(|r| r.value)
        .fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        pass: nec_ok == nec_total && pos_ok == pos_total && variation <= cfg.tolerances.variation,
        detail: format!(
            "C >= {cmin:.4}, variation {:.1}% (<= 20%), necessity rows {nec_ok}/{nec_total}",
            100.0 * variation
        ),
    })
}

fn apart() -> Result<Outcome> {
    let rows = rows_of(&ExperimentConfig::preset(Scenario::Apart))?;
    let growth = find(&rows, "ratio-step-growth").expect("growth row");
    let fit = find(&rows, "fitted-exponent").expect("fit row");
    Ok(Outcome {
        pass: growth.status == Status::Pass && fit.status == Status::Pass,
        detail: format!(
            "ratio step growth {:.3} (< 2), fitted exponent {:.3} vs {:.3} (within 0.25)",
            growth.value,
            fit.value,
            fit.target.unwrap_or(f64::NAN)
        ),
    })
}

fn report(k: u32, name: &str, budget: f64, secs: f64, out: Result<Outcome>) -> bool {
    let (pass, detail) = match out {
        Ok(o) => (o.pass && secs < budget, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!(
        "criterion {k:>2} {}: {name}: {detail} [{}]",
        if pass { "pass" } else { "FAIL" },
        fmt_time(secs, budget)
    );
    pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64())
}

fn main() {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let suite_start = Instant::now();
    let mut passed = Vec::new();

    let (out, secs) = timed(lattice);
    passed.push(report(1, "shifted lattices", 10.0, secs, out));
    let (out, secs) = timed(identities);
    passed.push(report(2, "change of variables and level sets", 30.0, secs, out));
    let (out, secs) = timed(comp_sparse);
    passed.push(report(3, "composed sparse identity", 10.0, secs, out));

    // criteria 4 and 5 share the sparse runs; per-function time is checked inside
    let (runs, secs) = timed(|| -> Result<Vec<(&str, Vec<ReportRow>)>> {
        sparse_configs().into_iter().map(|(label, cfg)| Ok((label, rows_of(&cfg)?))).collect()
    });
    let budget = 60.0 * 40.0;
    match runs {
        Ok(runs) => {
            passed.push(report(4, "sparse domination", budget, secs, Ok(sparse(&runs))));
            passed.push(report(5, "Calderon-Zygmund audits", budget, secs, Ok(cz(&runs))));
        }
        Err(e) => {
            let msg = e.to_string();
            passed.push(report(4, "sparse domination", budget, secs, Err(e)));
            passed.push(report(5, "Calderon-Zygmund audits", budget, secs, Err(rough_weights::Error::Config(msg))));
        }
    }

    let (out, secs) = timed(weight_traces);
    passed.push(report(6, "weight-class traces", 60.0, secs, out));
    let (out, secs) = timed(sawyer);
    passed.push(report(7, "testing and class orderings", 120.0, secs, out));
    let (out, secs) = timed(appendix);
    passed.push(report(8, "appendix properties", 120.0, secs, out));
    let (out, secs) = timed(necessity);
    passed.push(report(9, "necessity", 120.0, secs, out));
    let (out, secs) = timed(apart);
    passed.push(report(10, "sharp scaling", 300.0, secs, out));

    let ok = passed.iter().filter(|p| **p).count();
    println!(
        "acceptance: {ok} of {} criteria pass; total {:.1} s (target 900 s)",
        passed.len(),
        suite_start.elapsed().as_secs_f64()
    );
    if strict && ok < passed.len() {
        std::process::exit(1);
    }
}
