//! Sparse domination certificates for a seeded test suite on 2^12 cells,
//! for a reflection pair and an inverse pair of dilations.
use std::time::Instant;

use rough_weights::geometry::LinearMap;
use rough_weights::grid::Grid;
use rough_weights::operators::OperatorSpec;
use rough_weights::sparse::{build_sparse_domination, SparseBuildParams};
use rough_weights::verify::{test_suite, TestKind, DEFAULT_SUITE_SIZE};

fn main() -> rough_weights::Result<()> {
    let grid = Grid::new(1, 3, 8)?;
    let alpha = 0.25;
    let a = (1.0 - alpha) / 2.0;
    let configs = [
        ("reflection", vec![LinearMap::scalar(1, -1, 1)?, LinearMap::identity(1)?]),
        ("dilations", vec![LinearMap::scalar(1, 2, 1)?, LinearMap::scalar(1, 1, 2)?]),
    ];
    let suite = test_suite(grid, 1, DEFAULT_SUITE_SIZE)?;
    for (name, maps) in configs {
        let spec = OperatorSpec::power_product(1, alpha, &[a, a], maps)?;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for t in &suite {
            let start = Instant::now();
            let cert = build_sparse_domination(&spec, &t.f, &SparseBuildParams::new(1))?;
            let c = cert.constant.unwrap_or(f64::NAN);
            if t.kind != TestKind::Oscillating {
                lo = lo.min(c);
                hi = hi.max(c);
            }
            println!(
                "{name:10} {:12} c={c:8.4} stopping cubes={:3} gamma=[{}, {}] certified={} {:.2?}",
                t.label,
                cert.stopping.len(),
                cert.stats.min_gamma,
                cert.stats.max_gamma,
                cert.is_certified(),
                start.elapsed()
            );
        }
        println!("{name}: c in [{lo:.3}, {hi:.3}], spread {:.2} over nonnegative members", hi / lo);
    }
    Ok(())
}
