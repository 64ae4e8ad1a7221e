//! A run driven by a configuration text, written as the deterministic CSV report.
use rough_weights::verify::{all_passed, render_report, run_scenario, ExperimentConfig};

const CONFIG: &str = "
scenario = sawyer

[grid]
n = 1
j = 2
l = 4
levels = 4, 5, 6

[weight]
recipe = power
beta = -0.3

[matrices]
a1 = -1

[exponents]
alpha = 0
p = 2
q = 2
";

fn main() -> rough_weights::Result<()> {
    let cfg = ExperimentConfig::parse(CONFIG, None)?;
    let rows = run_scenario(&cfg)?;
    print!("{}", render_report(&rows)?);
    eprintln!("{}", if all_passed(&rows) { "all rows pass" } else { "some rows fail" });
    Ok(())
}
