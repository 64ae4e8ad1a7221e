use super::{SparseCube, SparseFamily};
use crate::error::{Error, Result};
use crate::geometry::LinearMap;
use crate::grid::{pullback, Grid, GridFunction};

/// `Σ_{cells of Q ∩ box} |f|^s`; the same loop feeds both sides of the
/// composition identity so that they agree to rounding.
fn power_sum(f: &GridFunction, q: &SparseCube, s: f64) -> f64 {
    let vals = f.values();
    let mut acc = 0.0;
    if s == 1.0 {
        q.for_each_cell(&f.grid(), |i| acc += vals[i].abs());
    } else {
        q.for_each_cell(&f.grid(), |i| acc += vals[i].abs().powf(s));
    }
    acc
}

/// `‖f‖_{s,Q} = (|Q|^{-1} ∫_Q |f|^s)^{1/s}` with `f ≡ 0` off the box.
pub fn cube_lr_average(f: &GridFunction, q: &SparseCube, s: f64) -> f64 {
    let avg = power_sum(f, q, s) / q.cell_count() as f64;
    if s == 1.0 {
        avg
    } else {
        avg.powf(1.0 / s)
    }
}

/// Grid four times as wide as `grid` with the same cells; it holds every
/// triple of an in-box cube and every image of the box under a map that
/// expands by at most 4.
fn padded(grid: &Grid) -> Result<(Grid, i64)> {
    let ext = Grid::new(grid.dim(), grid.half_width_exp() + 2, grid.level())?;
    let off = 3 * grid.cells_per_axis() as i64 / 2;
    Ok((ext, off))
}

/// `x ↦ Σ_Q c_Q χ_Q(A^{-1}x)`, cell-averaged exactly.
pub(crate) fn twisted_indicator_sum(
    grid: &Grid,
    terms: &[(SparseCube, f64)],
    a: &LinearMap,
) -> Result<GridFunction> {
    let n = grid.dim();
    if a.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.dim(),
        });
    }
    if !a.is_grid_compatible() {
        return Err(Error::IncompatibleMap(format!("{a:?} is not grid-compatible")));
    }
    if a.is_identity() {
        let mut out = vec![0.0; grid.len()];
        for (q, c) in terms {
            q.for_each_cell(grid, |i| out[i] += c);
        }
        return Ok(GridFunction::from_raw(*grid, out));
    }
    let (ext, off) = padded(grid)?;
    let me = ext.cells_per_axis() as i64;
    let mut g = vec![0.0; ext.len()];
    for (q, c) in terms {
        let shifted = SparseCube::new(n, [q.lo[0] + off, q.lo[1] + off], q.side);
        if (0..n).any(|i| shifted.lo[i] < 0 || shifted.lo[i] + q.side as i64 > me) {
            return Err(Error::OutOfRange(format!("cube {q} is too far outside the grid box")));
        }
        shifted.for_each_cell(&ext, |i| g[i] += c);
    }
    let pulled = pullback(&GridFunction::from_raw(ext, g), &a.inverse())?.func;
    let m = grid.cells_per_axis();
    let pv = pulled.values();
    let out = (0..grid.len())
        .map(|idx| {
            let c = grid.coords(idx);
            let x = c[0] + off as usize;
            let y = if n == 1 { 0 } else { c[1] + off as usize };
            pv[x + y * ext.cells_per_axis()]
        })
        .collect::<Vec<_>>();
    debug_assert_eq!(out.len(), m.pow(n as u32));
    Ok(GridFunction::from_raw(*grid, out))
}

fn check_exponent(s: f64) -> Result<()> {
    if !(s >= 1.0) || s.is_infinite() {
        return Err(Error::InvalidArgument(format!("exponent {s} must be in [1, inf)")));
    }
    Ok(())
}

/// `x ↦ Σ_{Q∈S} |Q|^{α/n} ‖f‖_{s,Q} χ_Q(A^{-1}x)`.
pub fn sparse_apply(
    family: &SparseFamily,
    f: &GridFunction,
    alpha: f64,
    s: f64,
    a: &LinearMap,
) -> Result<GridFunction> {
    let grid = family.grid();
    if f.grid() != grid {
        return Err(Error::InvalidArgument("function and family live on different grids".into()));
    }
    check_exponent(s)?;
    let n = grid.dim() as f64;
    let terms: Vec<(SparseCube, f64)> = family
        .cubes()
        .iter()
        .map(|q| (*q, q.volume(&grid).powf(alpha / n) * cube_lr_average(f, q, s)))
        .filter(|(_, c)| *c != 0.0)
        .collect();
    twisted_indicator_sum(&grid, &terms, a)
}

/// `(Σ_Q (|Q|^{-β} ∫_Q |g|)^t χ_Q)^{1/t}`.
pub fn tilde_sparse_apply(family: &SparseFamily, g: &GridFunction, t: f64, beta: f64) -> Result<GridFunction> {
    let grid = family.grid();
    if g.grid() != grid {
        return Err(Error::InvalidArgument("function and family live on different grids".into()));
    }
    if !(t > 0.0) || t.is_infinite() {
        return Err(Error::InvalidArgument(format!("power {t} must be positive")));
    }
    let vol = grid.cell_volume();
    let mut out = vec![0.0; grid.len()];
    for q in family.cubes() {
        let integral = power_sum(g, q, 1.0) * vol;
        let c = (q.volume(&grid).powf(-beta) * integral).powf(t);
        q.for_each_cell(&grid, |i| out[i] += c);
    }
    let inv = 1.0 / t;
    Ok(GridFunction::from_raw(grid, out.into_iter().map(|v| v.powf(inv)).collect()))
}

/// Largest cellwise relative gap between `A_{α,r,S} f` and
/// `(Ã^{1-rα/n}_{1/r,S}(f^r))^{1/r}`.
pub fn comp_sparse_check(family: &SparseFamily, f: &GridFunction, alpha: f64, r: f64) -> Result<f64> {
    check_exponent(r)?;
    if f.values().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument("the composition identity needs f ≥ 0".into()));
    }
    let n = family.grid().dim() as f64;
    let beta = 1.0 - r * alpha / n;
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidArgument(format!("1 - rα/n = {beta} outside (0, 1]")));
    }
    let n_dim = family.grid().dim();
    let lhs = sparse_apply(family, f, alpha, r, &LinearMap::identity(n_dim)?)?;
    let fr = f.map(|v| v.powf(r));
    let rhs = tilde_sparse_apply(family, &fr, 1.0 / r, beta)?.map(|v| v.powf(1.0 / r));
    Ok(lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(&a, &b)| {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellBox;
    use approx::assert_relative_eq;

    fn grid() -> Grid {
        Grid::new(1, 1, 2).unwrap()
    }

    fn fam(cubes: Vec<SparseCube>) -> SparseFamily {
        SparseFamily::new(grid(), None, cubes, 0.5).unwrap()
    }

    fn id() -> LinearMap {
        LinearMap::identity(1).unwrap()
    }

    #[test]
    fn single_cube_indicator() {
        let g = grid();
        let b = CellBox::new(1, [4, 0], 4);
        let f = GridFunction::indicator_box(g, &b);
        let out = sparse_apply(&fam(vec![SparseCube::from_box(&b)]), &f, 0.5, 1.0, &id()).unwrap();
        for i in 0..g.len() {
            let expect = if (4..8).contains(&i) { 1.0 } else { 0.0 };
            assert_relative_eq!(out.values()[i], expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn nested_chain_geometric_sum() {
        // sides 2, 1, 1/2 with f ≡ 1: Σ l^{α} on the innermost cube
        let g = grid();
        let alpha = 0.5;
        let s = fam(vec![
            SparseCube::new(1, [8, 0], 8),
            SparseCube::new(1, [8, 0], 4),
            SparseCube::new(1, [8, 0], 2),
        ]);
        let out = sparse_apply(&s, &GridFunction::constant(g, 1.0), alpha, 1.0, &id()).unwrap();
        let expect: f64 = [2.0f64, 1.0, 0.5].iter().map(|l| l.powf(alpha)).sum();
        assert_relative_eq!(out.values()[8], expect, max_relative = 1e-14);
        assert_relative_eq!(out.values()[12], 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn reflection_mirrors_output() {
        let g = grid();
        let f = GridFunction::from_fn(g, |x| 1.0 + x[0] * x[0] + x[0]).unwrap();
        let s = fam(vec![SparseCube::new(1, [9, 0], 4), SparseCube::new(1, [2, 0], 2)]);
        let plain = sparse_apply(&s, &f, 0.3, 2.0, &id()).unwrap();
        let refl = sparse_apply(&s, &f, 0.3, 2.0, &LinearMap::scalar(1, -1, 1).unwrap()).unwrap();
        let m = g.len();
        for i in 0..m {
            assert_relative_eq!(refl.values()[i], plain.values()[m - 1 - i], max_relative = 1e-14);
        }
    }

    #[test]
    fn dilation_reads_outside_the_box() {
        // the triple of the last cell sticks out; A^{-1} = 2 reaches it
        let g = grid();
        let q = SparseCube::new(1, [15, 0], 1).triple();
        let f = GridFunction::constant(g, 1.0);
        let out = sparse_apply(&fam(vec![q]), &f, 0.0, 1.0, &LinearMap::scalar(1, 1, 2).unwrap()).unwrap();
        // 3Q = [1.5, 2.25) averages f ≡ 1 (zero off the box) to 2/3; x in [0.75, 1)
        // maps into it, x in [1, 1.25) half of the time
        assert_relative_eq!(out.values()[11], 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(out.values()[12], 1.0 / 3.0, max_relative = 1e-14);
        assert_eq!(out.values()[0], 0.0);
    }

    #[test]
    fn tilde_basics() {
        let g = grid();
        let b = CellBox::new(1, [0, 0], 4);
        let s = fam(vec![SparseCube::from_box(&b), SparseCube::new(1, [8, 0], 2)]);
        let one = tilde_sparse_apply(&fam(vec![SparseCube::from_box(&b)]), &GridFunction::indicator_box(g, &b), 1.0, 1.0)
            .unwrap();
        assert_relative_eq!(one.values()[0], 1.0, max_relative = 1e-14);
        assert!(tilde_sparse_apply(&s, &GridFunction::zeros(g), 2.0, 0.5).unwrap().is_zero());
        // disjoint cubes evaluate independently
        let f = GridFunction::from_fn(g, |x| x[0].abs()).unwrap();
        let both = tilde_sparse_apply(&s, &f, 2.0, 0.5).unwrap();
        let first = tilde_sparse_apply(&fam(vec![s.cubes()[0]]), &f, 2.0, 0.5).unwrap();
        let second = tilde_sparse_apply(&fam(vec![s.cubes()[1]]), &f, 2.0, 0.5).unwrap();
        assert_relative_eq!(both.values()[1], first.values()[1], max_relative = 1e-14);
        assert_relative_eq!(both.values()[9], second.values()[9], max_relative = 1e-14);
    }

    #[test]
    fn composition_identity() {
        let g = grid();
        let s = fam(vec![
            SparseCube::new(1, [0, 0], 16),
            SparseCube::new(1, [4, 0], 4),
            SparseCube::new(1, [5, 0], 1),
            SparseCube::new(1, [-4, 0], 12),
        ]);
        let f = GridFunction::from_fn(g, |x| (3.0 * x[0]).sin().abs() + 0.1).unwrap();
        assert!(comp_sparse_check(&s, &f, 0.3, 2.0).unwrap() <= 1e-12);
        assert_eq!(comp_sparse_check(&s, &GridFunction::zeros(g), 0.3, 2.0).unwrap(), 0.0);
        let single = fam(vec![SparseCube::new(1, [0, 0], 8)]);
        let one = GridFunction::constant(g, 1.0);
        assert!(comp_sparse_check(&single, &one, 0.5, 1.5).unwrap() <= 1e-15);
        let lhs = sparse_apply(&single, &one, 0.5, 1.5, &id()).unwrap();
        assert_relative_eq!(lhs.values()[0], 2f64.sqrt(), max_relative = 1e-15);
    }
}
