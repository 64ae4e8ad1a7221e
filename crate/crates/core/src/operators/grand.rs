use std::collections::HashMap;

use super::{Budget, KernelEvaluator, OperatorSpec};
use crate::error::{Error, Result};
use crate::geometry::{Cube, LinearMap};
use crate::grid::{CellBox, Grid, GridFunction};

/// Which cube tuples `(Q_1, …, Q_m)` enter the supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TupleCap {
    /// All `Q_i` at the same dyadic level.
    #[default]
    Diagonal,
    /// Every combination of levels (cost grows like `levels^m`).
    Product,
}

/// Cells of `3b` clipped to the grid box.
fn triple_cells(grid: &Grid, b: &CellBox, out: &mut Vec<usize>) {
    let m = grid.cells_per_axis();
    let n = grid.dim();
    let mut lo = [0usize; 2];
    let mut hi = [1usize; 2];
    for i in 0..n {
        lo[i] = b.lo[i].saturating_sub(b.side);
        hi[i] = (b.lo[i] + 2 * b.side).min(m);
    }
    for y in lo[1]..hi[1] {
        for x in lo[0]..hi[0] {
            out.push(if n == 1 { x } else { x + m * y });
        }
    }
}

fn union_cells(grid: &Grid, boxes: &[CellBox], tripled: bool) -> Vec<usize> {
    let mut v = Vec::new();
    for b in boxes {
        if tripled {
            triple_cells(grid, b, &mut v);
        } else {
            v.extend(grid.cells_of(b));
        }
    }
    v.sort_unstable();
    v.dedup();
    v
}

/// Local grand maximal truncated operator over roots `Q_0^1, …, Q_0^m`
/// (standard dyadic cubes); `Q_i` runs over the dyadic ancestors of the cell
/// of `A_i^{-1} x` inside `Q_0^i`, and components with `A_i^{-1} x` outside
/// their root are dropped.
pub struct GrandMaximal<'a> {
    ev: &'a KernelEvaluator,
    inverses: Vec<LinearMap>,
    values: Vec<f64>,
    roots: Vec<CellBox>,
    root_values: HashMap<usize, f64>,
    cap: TupleCap,
    memo: HashMap<Vec<CellBox>, f64>,
}

impl<'a> GrandMaximal<'a> {
    pub fn new(
        ev: &'a KernelEvaluator,
        maps: &[LinearMap],
        f: &GridFunction,
        roots: Vec<CellBox>,
        cap: TupleCap,
    ) -> Result<Self> {
        let grid = ev.grid();
        if roots.len() != maps.len() {
            return Err(Error::InvalidArgument(format!("{} roots for {} maps", roots.len(), maps.len())));
        }
        for r in &roots {
            let aligned = r.side.is_power_of_two() && (0..grid.dim()).all(|i| r.lo[i] % r.side == 0);
            if !aligned || !grid.full_box().contains(r) {
                return Err(Error::Alignment(format!("root {r:?} is not a dyadic cube of the grid")));
            }
        }
        let sources = union_cells(&grid, &roots, true);
        let targets = union_cells(&grid, &roots, false);
        let g = ev.eval_at(f.values(), &sources, &targets);
        Ok(GrandMaximal {
            ev,
            inverses: maps.iter().map(|a| a.inverse()).collect(),
            values: f.values().to_vec(),
            root_values: targets.into_iter().zip(g).collect(),
            roots,
            cap,
            memo: HashMap::new(),
        })
    }

    /// Dyadic ancestors (fine to coarse) of the cell of `A_i^{-1} x` inside root `i`.
    fn chain(&self, i: usize, x: usize) -> Vec<CellBox> {
        let grid = self.ev.grid();
        let y = self.inverses[i].apply_f64(&grid.cell_center(x));
        let Some(c) = grid.cell_of_point(&y) else {
            return Vec::new();
        };
        let cc = grid.coords(c);
        let root = self.roots[i];
        if !root.contains_coords(&cc) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut s = 1;
        while s <= root.side {
            let mut lo = [0usize; 2];
            for a in 0..grid.dim() {
                lo[a] = cc[a] / s * s;
            }
            out.push(CellBox::new(grid.dim(), lo, s));
            s *= 2;
        }
        out
    }

    fn tuple_value(&mut self, tuple: Vec<CellBox>) -> f64 {
        if let Some(&v) = self.memo.get(&tuple) {
            return v;
        }
        let grid = self.ev.grid();
        let sources = union_cells(&grid, &tuple, true);
        let targets = union_cells(&grid, &tuple, false);
        let inner = self.ev.eval_at(&self.values, &sources, &targets);
        let v = targets
            .iter()
            .zip(inner)
            .map(|(t, s)| (self.root_values.get(t).copied().unwrap_or(0.0) - s).abs())
            .fold(0.0, f64::max);
        self.memo.insert(tuple, v);
        v
    }

    pub fn value_at(&mut self, x: usize) -> f64 {
        let chains: Vec<Vec<CellBox>> = (0..self.roots.len())
            .map(|i| self.chain(i, x))
            .filter(|c| !c.is_empty())
            .collect();
        if chains.is_empty() {
            return 0.0;
        }
        let mut best = 0.0f64;
        match self.cap {
            TupleCap::Diagonal => {
                let depth = chains.iter().map(|c| c.len()).max().unwrap();
                for l in 0..depth {
                    let tuple: Vec<CellBox> = chains.iter().map(|c| c[l.min(c.len() - 1)]).collect();
                    best = best.max(self.tuple_value(tuple));
                }
            }
            TupleCap::Product => {
                let mut idx = vec![0usize; chains.len()];
                loop {
                    let tuple: Vec<CellBox> = chains.iter().zip(&idx).map(|(c, &k)| c[k]).collect();
                    best = best.max(self.tuple_value(tuple));
                    let mut a = 0;
                    loop {
                        if a == idx.len() {
                            return best;
                        }
                        idx[a] += 1;
                        if idx[a] < chains[a].len() {
                            break;
                        }
                        idx[a] = 0;
                        a += 1;
                    }
                }
            }
        }
        best
    }

    pub fn values_at(&mut self, xs: &[usize]) -> Vec<f64> {
        xs.iter().map(|&x| self.value_at(x)).collect()
    }

    pub fn evaluated_tuples(&self) -> usize {
        self.memo.len()
    }
}

/// The local grand maximal truncated operator on every cell.
pub fn grand_maximal_truncated_local(
    spec: &OperatorSpec,
    f: &GridFunction,
    roots: &[Cube],
    cap: TupleCap,
    budget: Budget,
) -> Result<GridFunction> {
    let grid = f.grid();
    let ev = KernelEvaluator::new(spec, grid, budget)?;
    let boxes = roots.iter().map(|q| grid.cell_box(q)).collect::<Result<Vec<_>>>()?;
    let mut gm = GrandMaximal::new(&ev, &spec.maps, f, boxes, cap)?;
    let all: Vec<usize> = (0..grid.len()).collect();
    GridFunction::from_values(grid, gm.values_at(&all))
}
