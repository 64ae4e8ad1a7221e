//! Refinement traces of the reflected two-exponent constant for power weights,
//! recorded on the q-th power (the one-exponent constant of w^q).

use rough_weights::geometry::LinearMap;
use rough_weights::grid::{CubeFamily, Grid};
use rough_weights::weights::{matrix_apq_constant, ExponentSet, WeightConstantReport, WeightRecipe};

fn main() -> rough_weights::Result<()> {
    let reflect = LinearMap::scalar(1, -1, 1)?;
    let e = ExponentSet::new(1, 0.0, 2.0, 2.0)?;
    let grids: Vec<Grid> = (4..=8).map(|l| Grid::new(1, 3, l)).collect::<Result<_, _>>()?;
    for beta in [-0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0] {
        let report = WeightConstantReport::traced_powered(&grids, e.q(), |g| {
            let w = WeightRecipe::power(beta).build(g)?;
            matrix_apq_constant(&w, &reflect, &e, &CubeFamily::lattice_union(g))
        })?;
        let vals: Vec<String> = report.trace.values().iter().map(|v| format!("{v:.4}")).collect();
        println!("beta {beta:>5}: {}  -> {}", vals.join(" "), report.verdict());
    }
    Ok(())
}
