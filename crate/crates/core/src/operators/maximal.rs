use crate::error::{Error, Result};
use crate::geometry::LinearMap;
use crate::grid::{pullback_mode, BoxSums, CubeFamily, FamilyKind, GridFunction, PullbackMode};

fn check_params(n: usize, alpha: f64, s: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha < n as f64) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, n)")));
    }
    if !(s >= 1.0) || s.is_infinite() {
        return Err(Error::InvalidArgument(format!("s = {s} must be in [1, inf)")));
    }
    Ok(())
}

/// `M_{α,s} f(x) = sup_{Q ∋ x} |Q|^{α/n} (avg_Q |f|^s)^{1/s}` over a family.
pub fn fractional_maximal(f: &GridFunction, alpha: f64, s: f64, family: &CubeFamily) -> Result<GridFunction> {
    let grid = f.grid();
    let n = grid.dim();
    check_params(n, alpha, s)?;
    if family.grid() != grid {
        return Err(Error::InvalidArgument("family lives on a different grid".into()));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let powered: Vec<f64> = f
        .values()
        .iter()
        .map(|v| if s == 1.0 { v.abs() } else { v.abs().powf(s) })
        .collect();
    let sums = BoxSums::new(grid, &powered);
    let cell_vol = grid.cell_volume();
    let value = |count: usize, sum: f64| -> f64 {
        let mean = (sum / count as f64).max(0.0);
        let avg = if s == 1.0 { mean } else { mean.powf(1.0 / s) };
        if alpha == 0.0 {
            avg
        } else {
            (count as f64 * cell_vol).powf(alpha / n as f64) * avg
        }
    };
    let mut out = vec![0.0f64; grid.len()];
    if *family.kind() == FamilyKind::AllIntervals {
        let m = grid.cells_per_axis();
        let mut suffix = vec![0.0f64; m + 2];
        for a in 0..m {
            // suffix[len] = max over lengths >= len of the value of [a, a+len)
            suffix[m - a + 1] = 0.0;
            for len in (1..=(m - a)).rev() {
                let v = value(len, sums.range(a, a + len));
                suffix[len] = suffix[len + 1].max(v);
            }
            for x in a..m {
                let v = suffix[x - a + 1];
                if v > out[x] {
                    out[x] = v;
                }
            }
        }
    } else {
        family.for_each(|b| {
            let v = value(b.cell_count(), sums.sum(&b));
            if v > 0.0 {
                grid.for_each_cell(&b, |i| {
                    if v > out[i] {
                        out[i] = v;
                    }
                });
            }
        });
    }
    GridFunction::from_values(grid, out)
}

/// `x ↦ M_{α,s} f(A^{-1} x)`.
pub fn composed_maximal(
    f: &GridFunction,
    alpha: f64,
    s: f64,
    a: &LinearMap,
    family: &CubeFamily,
) -> Result<GridFunction> {
    composed_maximal_mode(f, alpha, s, a, family, PullbackMode::Exact)
}

pub fn composed_maximal_mode(
    f: &GridFunction,
    alpha: f64,
    s: f64,
    a: &LinearMap,
    family: &CubeFamily,
    mode: PullbackMode,
) -> Result<GridFunction> {
    let m = fractional_maximal(f, alpha, s, family)?;
    if a.is_identity() {
        return Ok(m);
    }
    Ok(pullback_mode(&m, &a.inverse(), mode)?.func)
}

/// `(M(|g|^δ))^{1/δ}`.
pub fn delta_smoothed_maximal(g: &GridFunction, delta: f64, family: &CubeFamily) -> Result<GridFunction> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} must lie in (0, 1)")));
    }
    let powered = g.map(|v| v.abs().powf(delta));
    Ok(fractional_maximal(&powered, 0.0, 1.0, family)?.map(|v| v.powf(1.0 / delta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cube;
    use crate::grid::Grid;
    use approx::assert_relative_eq;

    fn brute(f: &GridFunction, alpha: f64, x: usize) -> f64 {
        let g = f.grid();
        let m = g.cells_per_axis();
        let mut best = 0.0f64;
        for a in 0..=x {
            for b in (x + 1)..=m {
                let s: f64 = f.values()[a..b].iter().map(|v| v.abs()).sum();
                let len = (b - a) as f64 * g.h();
                best = best.max(len.powf(alpha) * s / (b - a) as f64);
            }
        }
        best
    }

    #[test]
    fn interval_examples() {
        let g = Grid::new(1, 2, 2).unwrap();
        let f = GridFunction::indicator(g, &Cube::from_ints(&[0], 1).unwrap()).unwrap();
        let fam = CubeFamily::all_intervals(g).unwrap();
        let m0 = fractional_maximal(&f, 0.0, 1.0, &fam).unwrap();
        // the cell ending at x = 2
        let x2 = g.cell_of_point(&[2.0 - g.h() / 2.0]).unwrap();
        assert_relative_eq!(m0.values()[x2], 0.5, max_relative = 1e-14);
        let mh = fractional_maximal(&f, 0.5, 1.0, &fam).unwrap();
        let x0 = g.cell_of_point(&[0.5]).unwrap();
        assert_relative_eq!(mh.values()[x0], 1.0, max_relative = 1e-14);
        for x in 0..g.len() {
            assert_relative_eq!(mh.values()[x], brute(&f, 0.5, x), max_relative = 1e-12);
        }
        let z = fractional_maximal(&GridFunction::zeros(g), 0.3, 2.0, &fam).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn reflection_composition() {
        let g = Grid::new(1, 2, 2).unwrap();
        let f = GridFunction::indicator(g, &Cube::from_ints(&[0], 1).unwrap()).unwrap();
        let fam = CubeFamily::all_intervals(g).unwrap();
        let r = LinearMap::scalar(1, -1, 1).unwrap();
        let c = composed_maximal(&f, 0.0, 1.0, &r, &fam).unwrap();
        let xm2 = g.cell_of_point(&[-2.0]).unwrap();
        assert_relative_eq!(c.values()[xm2], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn delta_smoothing_of_constants() {
        let g = Grid::new(1, 1, 2).unwrap();
        let fam = CubeFamily::lattice_union(g).with_cells();
        let c = delta_smoothed_maximal(&GridFunction::constant(g, 2.5), 0.5, &fam).unwrap();
        assert!(c.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }
}
