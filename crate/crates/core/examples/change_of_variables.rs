//! Exact pullbacks by grid-compatible maps and the change-of-variables identity
//! ∫ f(Ax) dx = |det A|^{-1} ∫ f, up to the mass pushed out of the box.
use rough_weights::geometry::LinearMap;
use rough_weights::grid::{pullback, Grid, GridFunction};

fn main() -> rough_weights::Result<()> {
    let line = Grid::new(1, 2, 4)?;
    let plane = Grid::new(2, 1, 3)?;
    let bump = |x: &[f64]| (-x.iter().map(|v| v * v).sum::<f64>()).exp();
    let cases = [
        (line, LinearMap::scalar(1, -1, 1)?),
        (line, LinearMap::scalar(1, 2, 1)?),
        (line, LinearMap::scalar(1, 1, 2)?),
        (plane, LinearMap::diag(&[(2, 1), (1, 2)])?),
        (plane, LinearMap::from_pairs(2, &[(0, 1), (-1, 1), (1, 1), (0, 1)])?),
    ];
    for (grid, a) in cases {
        let f = GridFunction::from_fn(grid, bump)?;
        let cv = grid.cell_volume();
        let pb = pullback(&f, &a)?;
        let lhs = pb.func.total() * cv;
        let rhs = f.total() * cv / a.det_f64().abs();
        println!(
            "n={} det={:>4}: ∫f∘A = {lhs:.6}, ∫f/|det A| = {rhs:.6}, lost to the box {:.2e}",
            grid.dim(),
            a.det_f64(),
            pb.truncation_residual
        );
    }
    Ok(())
}
