//! Lower bounds for the product-kernel operator on indicators of cubes, and the
//! class constants they force on power weights across the admissible range.
use rough_weights::verify::{run_ejem, ExperimentConfig, Scenario, Status};

fn main() -> rough_weights::Result<()> {
    let cfg = ExperimentConfig::preset(Scenario::Ejem);
    for r in run_ejem(&cfg)? {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Measured => "",
        };
        let depth = r.depth.map(|d| format!("@{d}")).unwrap_or_default();
        println!("{:<52} {:>12.5} {status:4} {}", format!("{}{depth}", r.quantity), r.value, r.note);
    }
    Ok(())
}
