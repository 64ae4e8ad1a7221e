//! Discrete weighted operator norms by power iteration along floored power
//! weights w = max(|x|, ε)^{1/2}, against the reflected class constant, and
//! the growth exponent fitted to the pairs.
use rough_weights::geometry::LinearMap;
use rough_weights::grid::{CubeFamily, Grid};
use rough_weights::operators::{weighted_norm_estimate, Budget, KernelEvaluator, OperatorSpec};
use rough_weights::verify::{fitted_exponent, fitted_growth_exponent};
use rough_weights::weights::{matrix_apq_constant, ExponentSet, WeightRecipe};

fn main() -> rough_weights::Result<()> {
    let grid = Grid::new(1, 2, 6)?;
    let maps = vec![LinearMap::scalar(1, 2, 1)?, LinearMap::scalar(1, 1, 2)?];
    let spec = OperatorSpec::power_product(1, 0.0, &[0.5, 0.5], maps)?;
    let ev = KernelEvaluator::new(&spec, grid, Budget::guarded())?;
    let e = ExponentSet::new(1, 0.0, 2.0, 2.0)?;
    let reflect = LinearMap::scalar(1, -1, 1)?;
    let family = CubeFamily::lattice_union(grid);
    let (mut consts, mut norms) = (Vec::new(), Vec::new());
    for floor in [0.25, 0.125, 0.0625, 0.03125] {
        let w = WeightRecipe::FlooredPower { beta: 0.5, floor }.build(grid)?;
        let est = weighted_norm_estimate(&ev, &w, 2.0, 2.0, 2000)?;
        let c = matrix_apq_constant(&w, &reflect, &e, &family)?;
        println!(
            "floor {floor:<8} norm {:.5} ({} steps{}), class constant {:.5}",
            est.value,
            est.iterations,
            if est.converged { "" } else { ", not converged" },
            c.effective_value()
        );
        consts.push(c.effective_value());
        norms.push(est.value);
    }
    let (g, a, b) = fitted_growth_exponent(&consts, &norms, 0.05, 4.0);
    println!("log-log slope {:.3}; offset fit norm = {a:.3} + {b:.3} * C^{g:.3}", fitted_exponent(&consts, &norms));
    Ok(())
}
