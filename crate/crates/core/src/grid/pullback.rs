use super::{GridFunction, Grid};
use crate::error::{Error, Result};
use crate::geometry::LinearMap;

/// How to evaluate `x ↦ f(Ax)` on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PullbackMode {
    /// Cell average of `f` over `A(cell)`; requires a grid-compatible map.
    Exact,
    /// `f` at the cell containing `A(center)`; approximate.
    NearestCell,
}

#[derive(Debug, Clone)]
pub struct Pullback {
    pub func: GridFunction,
    /// `|det A|^{-1} ∫|f| - ∫|f∘A|`: mass of `f` not reached from inside the box.
    pub truncation_residual: f64,
    pub approximate: bool,
}

/// Overlap weights of the image interval `[lo, hi)` with grid cells along one axis.
fn axis_overlaps(grid: &Grid, lo: f64, hi: f64) -> Vec<(usize, f64)> {
    let h = grid.h();
    let w = grid.half_width();
    let m = grid.cells_per_axis() as f64;
    let len = hi - lo;
    let a = ((lo + w) / h).floor().max(0.0);
    let b = ((hi + w) / h).ceil().min(m);
    let mut out = Vec::new();
    let mut k = a;
    while k < b {
        let c0 = -w + k * h;
        let ov = (hi.min(c0 + h) - lo.max(c0)).max(0.0);
        if ov > 0.0 {
            out.push((k as usize, ov / len));
        }
        k += 1.0;
    }
    out
}

/// `x ↦ f(Ax)` for a grid-compatible map, cell-averaged exactly.
pub fn pullback(f: &GridFunction, a: &LinearMap) -> Result<Pullback> {
    pullback_mode(f, a, PullbackMode::Exact)
}

pub fn pullback_mode(f: &GridFunction, a: &LinearMap, mode: PullbackMode) -> Result<Pullback> {
    let grid = f.grid();
    let n = grid.dim();
    if a.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.dim(),
        });
    }
    let m = grid.cells_per_axis();
    let vals = f.values();
    let mut out = vec![0.0; grid.len()];
    let approximate = match mode {
        PullbackMode::Exact => {
            if !a.is_grid_compatible() {
                return Err(Error::IncompatibleMap(format!(
                    "{a:?} is not a signed permutation times powers of two; request nearest-cell resampling"
                )));
            }
            let ax = a.axis_structure().expect("grid compatible");
            let factors: Vec<f64> = ax
                .iter()
                .map(|(_, q)| *q.numer() as f64 / *q.denom() as f64)
                .collect();
            // per output axis i and source coordinate k: overlaps along axis i of the image
            let tables: Vec<Vec<Vec<(usize, f64)>>> = (0..n)
                .map(|i| {
                    (0..m)
                        .map(|k| {
                            let c0 = grid.axis_lo(k);
                            let (u, v) = (factors[i] * c0, factors[i] * (c0 + grid.h()));
                            axis_overlaps(&grid, u.min(v), u.max(v))
                        })
                        .collect()
                })
                .collect();
            for (idx, o) in out.iter_mut().enumerate() {
                let c = grid.coords(idx);
                if n == 1 {
                    *o = tables[0][c[0]].iter().map(|&(k, wt)| wt * vals[k]).sum();
                } else {
                    let t0 = &tables[0][c[ax[0].0]];
                    let t1 = &tables[1][c[ax[1].0]];
                    let mut s = 0.0;
                    for &(k1, w1) in t1 {
                        for &(k0, w0) in t0 {
                            s += w0 * w1 * vals[k0 + m * k1];
                        }
                    }
                    *o = s;
                }
            }
            false
        }
        PullbackMode::NearestCell => {
            for (idx, o) in out.iter_mut().enumerate() {
                let y = a.apply_f64(&grid.cell_center(idx));
                if let Some(k) = grid.cell_of_point(&y) {
                    *o = vals[k];
                }
            }
            true
        }
    };
    let func = GridFunction::from_raw(grid, out);
    let mass_f: f64 = f.abs().total();
    let mass_g: f64 = func.abs().total();
    let truncation_residual = (mass_f / a.det_f64().abs() - mass_g).max(0.0) * grid.cell_volume();
    Ok(Pullback {
        func,
        truncation_residual,
        approximate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cube;
    use approx::assert_relative_eq;

    #[test]
    fn reflection_and_dilation() {
        let g = Grid::new(1, 2, 2).unwrap();
        let chi01 = GridFunction::indicator(g, &Cube::from_ints(&[0], 1).unwrap()).unwrap();
        let r = pullback(&chi01, &LinearMap::scalar(1, -1, 1).unwrap()).unwrap();
        let expect = GridFunction::indicator(g, &Cube::from_ints(&[-1], 1).unwrap()).unwrap();
        assert_eq!(r.func, expect);
        assert!(!r.approximate);

        let chi02 = GridFunction::indicator(g, &Cube::from_ints(&[0], 2).unwrap()).unwrap();
        let d = pullback(&chi02, &LinearMap::scalar(1, 2, 1).unwrap()).unwrap();
        assert_eq!(d.func, chi01);
        assert_relative_eq!(d.func.total(), 0.5 * chi02.total());
        assert_eq!(d.truncation_residual, 0.0);

        let id = pullback(&chi02, &LinearMap::identity(1).unwrap()).unwrap();
        assert_eq!(id.func, chi02);
    }

    #[test]
    fn contraction_averages_and_reports_loss() {
        let g = Grid::new(1, 1, 0).unwrap();
        let f = GridFunction::from_values(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        // f(x/2): each cell lies inside one half-size cell
        let half = pullback(&f, &LinearMap::scalar(1, 1, 2).unwrap()).unwrap();
        assert_eq!(half.func.values(), &[2.0, 2.0, 3.0, 3.0]);
        assert!(half.truncation_residual > 0.0);
        let dbl = pullback(&f, &LinearMap::scalar(1, 2, 1).unwrap()).unwrap();
        assert_eq!(dbl.func.values(), &[0.0, 1.5, 3.5, 0.0]);
    }

    #[test]
    fn incompatible_needs_mode() {
        let g = Grid::new(1, 1, 1).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let a = LinearMap::scalar(1, 3, 1).unwrap();
        assert!(matches!(pullback(&f, &a), Err(Error::IncompatibleMap(_))));
        let r = pullback_mode(&f, &a, PullbackMode::NearestCell).unwrap();
        assert!(r.approximate);
    }
}
