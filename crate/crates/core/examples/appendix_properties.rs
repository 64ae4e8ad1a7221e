//! Property matrix of the single-exponent matrix class: monotonicity in p,
//! duality, the determinant factor, the characterization ratio and others,
//! over the built-in configurations.
use rough_weights::grid::{CubeFamily, Grid};
use rough_weights::verify::appendix_configs;
use rough_weights::weights::appendix_property_report;

fn main() -> rough_weights::Result<()> {
    for cfg in appendix_configs(Grid::new(1, 2, 4)?)? {
        let family = CubeFamily::all_cubes(cfg.w.grid());
        let report = appendix_property_report(&cfg, &family)?;
        println!("{} [{}]: {}", report.label, report.family, if report.passed() { "all hold" } else { "FAILED" });
        for c in &report.checks {
            let tag = if !c.asserted { "recorded" } else if c.holds { "ok" } else { "FAIL" };
            println!("  {:<14} {:>12.5} <= {:<12.5} {tag}", c.id, c.lhs, c.rhs);
        }
    }
    Ok(())
}
