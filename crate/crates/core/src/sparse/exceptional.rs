use super::operator::cube_lr_average;
use super::SparseCube;
use crate::error::{Error, Result};
use crate::geometry::LinearMap;
use crate::grid::{CellBox, CellMask, Grid, GridFunction};
use crate::operators::{Budget, KernelEvaluator, OperatorSpec};

/// Tuning knobs of the sparse builder.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBuildParams {
    /// Starting threshold multiplier; doubled until the packing bound holds.
    pub gamma: f64,
    /// Calderón–Zygmund height.
    pub height: f64,
    pub max_depth: usize,
    /// Averaging exponent of the sparse operator.
    pub s: f64,
    pub max_doublings: u32,
    pub budget: Budget,
}

impl SparseBuildParams {
    /// `γ = 1`, height `2^{-(n+1)}`, `s = 1`, at most 20 doublings.
    pub fn new(n: usize) -> Self {
        SparseBuildParams {
            gamma: 1.0,
            height: 0.5f64.powi(n as i32 + 1),
            max_depth: 64,
            s: 1.0,
            max_doublings: 20,
            budget: Budget::guarded(),
        }
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || self.gamma.is_infinite() {
            return Err(Error::InvalidArgument(format!("gamma {} must be positive", self.gamma)));
        }
        if !(self.height > 0.0 && self.height < 1.0) {
            return Err(Error::InvalidArgument(format!("height {} outside (0, 1)", self.height)));
        }
        if !(self.s >= 1.0) || self.s.is_infinite() {
            return Err(Error::InvalidArgument(format!("exponent {} must be in [1, inf)", self.s)));
        }
        Ok(())
    }
}

/// Cells meeting `A(b)`, as `[lo, hi)` ranges clipped to the box.
pub(crate) fn image_range(grid: &Grid, a: &LinearMap, b: &CellBox) -> Option<([usize; 2], [usize; 2])> {
    let n = grid.dim();
    let h = grid.h();
    let w = grid.half_width();
    let m = grid.cells_per_axis() as f64;
    let lo: Vec<f64> = (0..n).map(|i| grid.axis_lo(b.lo[i])).collect();
    let hi: Vec<f64> = lo.iter().map(|v| v + b.side as f64 * h).collect();
    let p = a.apply_f64(&lo);
    let q = a.apply_f64(&hi);
    let mut out_lo = [0usize; 2];
    let mut out_hi = [1usize; 2];
    for i in 0..n {
        let a0 = ((p[i].min(q[i]) + w) / h).floor().max(0.0);
        let b0 = ((p[i].max(q[i]) + w) / h).ceil().min(m);
        if a0 >= b0 {
            return None;
        }
        out_lo[i] = a0 as usize;
        out_hi[i] = b0 as usize;
    }
    Some((out_lo, out_hi))
}

fn range_cells(grid: &Grid, r: Option<([usize; 2], [usize; 2])>) -> Vec<usize> {
    let Some((lo, hi)) = r else {
        return Vec::new();
    };
    let m = grid.cells_per_axis();
    let mut v = Vec::with_capacity((hi[0] - lo[0]) * (hi[1] - lo[1]));
    for y in lo[1]..hi[1] {
        for x in lo[0]..hi[0] {
            v.push(x + m * y);
        }
    }
    v
}

fn triple_sources(grid: &Grid, b: &CellBox) -> Vec<usize> {
    let t = SparseCube::from_box(b).triple();
    let mut v = Vec::new();
    t.for_each_cell(grid, |i| v.push(i));
    v
}

/// Level data of the exceptional set of one root `P`, reusable across
/// thresholds.
///
/// For an output cell `x` and a side `l`, the tuple `(Q_1, …, Q_m)` holds
/// the side-`l` dyadic cubes containing the points `A_i^{-1}x`; removing
/// `∪ 3Q_i` from `3P` excises every kernel singularity seen from
/// `N = ∩ A_i Q_i ∋ x`. The truncated maximal value at `x` is
/// `max_l max_{ξ ∈ N} |T(fχ_{3P ∖ ∪3Q_i})(ξ)|`.
#[derive(Debug, Clone)]
pub struct ExceptionalProfile {
    root: CellBox,
    /// `‖f‖_{s,3P}`.
    pub norm: f64,
    /// `m |3P|^{α/n} ‖f‖_{s,3P}`; the operator clause fires above `γ` times this.
    pub scale: f64,
    /// `(cell, |f|)` on `P`, present only when `α = 0`.
    size_clause: Option<Vec<(usize, f64)>>,
    /// `(cell z, max_i max over x ∈ A_i z of max(|T(fχ_{3P})(x)|, truncated maximal value at x))`.
    operator_clause: Vec<(usize, f64)>,
}

type Tuple = (usize, Vec<Option<[usize; 2]>>);

fn intersect(a: ([usize; 2], [usize; 2]), b: ([usize; 2], [usize; 2])) -> Option<([usize; 2], [usize; 2])> {
    let lo = [a.0[0].max(b.0[0]), a.0[1].max(b.0[1])];
    let hi = [a.1[0].min(b.1[0]), a.1[1].min(b.1[1])];
    (lo[0] < hi[0] && lo[1] < hi[1]).then_some((lo, hi))
}

impl ExceptionalProfile {
    pub fn compute(ev: &KernelEvaluator, spec: &OperatorSpec, f: &GridFunction, root: &CellBox, s: f64) -> Self {
        let grid = ev.grid();
        let n = grid.dim();
        let vals = f.values();
        let triple = SparseCube::from_box(root).triple();
        let norm = cube_lr_average(f, &triple, s);
        let scale = spec.m() as f64 * triple.volume(&grid).powf(spec.alpha / n as f64) * norm;
        let cells = grid.cells_of(root);
        let size_clause = (spec.alpha == 0.0).then(|| cells.iter().map(|&i| (i, vals[i].abs())).collect());
        if norm == 0.0 {
            return ExceptionalProfile {
                root: *root,
                norm,
                scale,
                size_clause,
                operator_clause: cells.iter().map(|&i| (i, 0.0)).collect(),
            };
        }
        let inverses: Vec<LinearMap> = spec.maps.iter().map(|a| a.inverse()).collect();
        let in_triple = |c: usize| {
            let k = grid.coords(c);
            triple.contains_coords(&[k[0] as i64, k[1] as i64])
        };

        // output cells that see P through some map
        let mut outputs: Vec<usize> = Vec::new();
        for a in &spec.maps {
            outputs.extend(range_cells(&grid, image_range(&grid, a, root)));
        }
        outputs.sort_unstable();
        outputs.dedup();

        // tuples seen from each output cell, and the cells where they are read
        let mut tuples: std::collections::HashMap<Tuple, Vec<usize>> = std::collections::HashMap::new();
        let mut per_output: Vec<Vec<Tuple>> = Vec::with_capacity(outputs.len());
        let mut needed = outputs.clone();
        for &x in &outputs {
            let centre = grid.cell_center(x);
            let pre: Vec<Option<[usize; 2]>> = inverses
                .iter()
                .map(|b| grid.cell_of_point(&b.apply_f64(&centre)).map(|c| grid.coords(c)))
                .collect();
            let mut mine = Vec::new();
            let mut side = 1;
            while side <= root.side {
                let lows: Vec<Option<[usize; 2]>> = pre
                    .iter()
                    .map(|c| {
                        c.map(|c| {
                            let mut lo = [0usize; 2];
                            for a in 0..n {
                                lo[a] = c[a] / side * side;
                            }
                            lo
                        })
                    })
                    .collect();
                let key = (side, lows);
                if !tuples.contains_key(&key) {
                    let mut nbhd = Some(([0, 0], [grid.cells_per_axis(), if n == 1 { 1 } else { grid.cells_per_axis() }]));
                    for (a, lo) in spec.maps.iter().zip(&key.1) {
                        if let (Some(lo), Some(cur)) = (lo, nbhd) {
                            nbhd = image_range(&grid, a, &CellBox::new(n, *lo, side)).and_then(|r| intersect(cur, r));
                        }
                    }
                    let targets = range_cells(&grid, nbhd);
                    needed.extend(&targets);
                    tuples.insert(key.clone(), targets);
                }
                mine.push(key);
                side *= 2;
            }
            per_output.push(mine);
        }
        needed.sort_unstable();
        needed.dedup();
        let sources = triple_sources(&grid, root);
        let mut tp = vec![0.0; grid.len()];
        for (&x, v) in needed.iter().zip(ev.eval_at(vals, &sources, &needed)) {
            tp[x] = v;
        }

        // truncated value of each tuple
        let mut value: std::collections::HashMap<&Tuple, f64> = std::collections::HashMap::with_capacity(tuples.len());
        for (key, targets) in &tuples {
            let (side, lows) = key;
            let mut removed: Vec<usize> = Vec::new();
            for lo in lows.iter().flatten() {
                removed.extend(triple_sources(&grid, &CellBox::new(n, *lo, *side)).into_iter().filter(|&c| in_triple(c)));
            }
            removed.sort_unstable();
            removed.dedup();
            let inner = ev.eval_at(vals, &removed, targets);
            let v = targets.iter().zip(inner).map(|(&x, t)| (tp[x] - t).abs()).fold(0.0, f64::max);
            value.insert(key, v);
        }
        let mut at_output = vec![0.0f64; grid.len()];
        for (&x, keys) in outputs.iter().zip(&per_output) {
            at_output[x] = keys.iter().map(|k| value[k]).fold(tp[x].abs(), f64::max);
        }
        let operator_clause = cells
            .iter()
            .map(|&z| {
                let b = CellBox::new(n, grid.coords(z), 1);
                let v = spec
                    .maps
                    .iter()
                    .flat_map(|a| range_cells(&grid, image_range(&grid, a, &b)))
                    .map(|x| at_output[x])
                    .fold(0.0, f64::max);
                (z, v)
            })
            .collect();
        ExceptionalProfile {
            root: *root,
            norm,
            scale,
            size_clause,
            operator_clause,
        }
    }

    pub fn root(&self) -> CellBox {
        self.root
    }

    /// Cells of `P` where a clause exceeds its threshold at multiplier `γ`.
    pub fn mask(&self, grid: Grid, gamma: f64) -> CellMask {
        let mut m = CellMask::empty(grid);
        let thr = gamma * self.scale;
        for &(i, v) in &self.operator_clause {
            if v > thr {
                m.set(i, true);
            }
        }
        if let Some(sz) = &self.size_clause {
            let thr = gamma * self.norm;
            for &(i, v) in sz {
                if v > thr {
                    m.set(i, true);
                }
            }
        }
        m
    }
}

/// Union over `roots` of the exceptional sets at multiplier `params.gamma`.
pub fn exceptional_set(
    spec: &OperatorSpec,
    f: &GridFunction,
    roots: &[CellBox],
    params: &SparseBuildParams,
) -> Result<CellMask> {
    params.validate()?;
    let grid = f.grid();
    for r in roots {
        let aligned = r.side.is_power_of_two() && (0..grid.dim()).all(|i| r.lo[i] % r.side == 0);
        if !aligned || !grid.full_box().contains(r) {
            return Err(Error::Alignment(format!("root {r:?} is not a dyadic cube of the grid")));
        }
    }
    let ev = KernelEvaluator::new(spec, grid, params.budget)?;
    let mut out = CellMask::empty(grid);
    for r in roots {
        out.union_with(&ExceptionalProfile::compute(&ev, spec, f, r, params.s).mask(grid, params.gamma));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(alpha: f64) -> OperatorSpec {
        let a = (1.0 - alpha) / 2.0;
        OperatorSpec::power_product(
            1,
            alpha,
            &[a, a],
            vec![LinearMap::scalar(1, -1, 1).unwrap(), LinearMap::identity(1).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn zero_function_has_no_exceptional_cells() {
        let g = Grid::new(1, 1, 3).unwrap();
        let p = SparseBuildParams::new(1);
        let m = exceptional_set(&spec(0.0), &GridFunction::zeros(g), &[g.full_box()], &p).unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn huge_gamma_empties_the_mask() {
        let g = Grid::new(1, 1, 3).unwrap();
        let f = GridFunction::indicator_box(g, &CellBox::new(1, [20, 0], 1));
        let low = exceptional_set(&spec(0.0), &f, &[g.full_box()], &SparseBuildParams::new(1)).unwrap();
        assert!(!low.is_empty());
        let p = SparseBuildParams::new(1).with_gamma(1e12);
        assert!(exceptional_set(&spec(0.0), &f, &[g.full_box()], &p).unwrap().is_empty());
    }

    #[test]
    fn image_of_a_box_under_dilations() {
        let g = Grid::new(1, 1, 1).unwrap();
        // cells of side 1/2 on [-2, 2); [0, 1) is cells 4..6
        let b = CellBox::new(1, [4, 0], 2);
        assert_eq!(image_range(&g, &LinearMap::scalar(1, 2, 1).unwrap(), &b), Some(([4, 0], [8, 1])));
        assert_eq!(image_range(&g, &LinearMap::scalar(1, 1, 2).unwrap(), &b), Some(([4, 0], [5, 1])));
        assert_eq!(image_range(&g, &LinearMap::scalar(1, -1, 1).unwrap(), &b), Some(([2, 0], [4, 1])));
        let far = CellBox::new(1, [6, 0], 2);
        assert_eq!(image_range(&g, &LinearMap::scalar(1, 4, 1).unwrap(), &far), None);
    }
}
