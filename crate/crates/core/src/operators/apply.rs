use super::{KernelSpec, OperatorSpec};
use crate::error::{Error, Result};
use crate::geometry::LinearMap;
use crate::grid::{Grid, GridFunction};

pub const MAX_CELLS_1D: usize = 1 << 14;
pub const MAX_CELLS_2D: usize = 96 * 96;

/// Cost guard for dense quadrature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Budget {
    pub override_limit: bool,
}

impl Budget {
    pub fn guarded() -> Self {
        Budget { override_limit: false }
    }

    pub fn unlimited() -> Self {
        Budget { override_limit: true }
    }

    pub fn check(&self, grid: &Grid) -> Result<()> {
        let limit = if grid.dim() == 1 { MAX_CELLS_1D } else { MAX_CELLS_2D };
        if !self.override_limit && grid.len() > limit {
            return Err(Error::Budget(format!(
                "{} cells exceed the dense-quadrature limit of {limit}; use a coarser grid or override the budget",
                grid.len()
            )));
        }
        Ok(())
    }
}

/// Per-axis integer displacement `D = e + p·x - r·y` in units of `q`.
#[derive(Debug, Clone, Copy)]
struct AxisStep {
    e: i64,
    p: i64,
    r: i64,
    src: usize,
    q: f64,
}

#[derive(Debug, Clone)]
enum Factor {
    Table {
        axes: Vec<AxisStep>,
        offset: [i64; 2],
        width: usize,
        tab: Vec<f64>,
    },
    Direct {
        kernel: KernelSpec,
        images: Vec<Vec<f64>>,
    },
}

fn exact_int(v: f64) -> Option<i64> {
    (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
}

fn axis_step(grid: &Grid, a: f64, src: usize) -> Option<AxisStep> {
    let h = grid.h();
    let w = grid.half_width();
    let q = h * a.abs().min(1.0) / 2.0;
    Some(AxisStep {
        e: exact_int((a - 1.0) * (w - h / 2.0) / q)?,
        p: exact_int(h / q)?,
        r: exact_int(a * h / q)?,
        src,
        q,
    })
}

/// Dense product-kernel quadrature with precomputed displacement tables.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    grid: Grid,
    factors: Vec<Factor>,
    centers: Vec<Vec<f64>>,
}

impl KernelEvaluator {
    pub fn new(spec: &OperatorSpec, grid: Grid, budget: Budget) -> Result<Self> {
        spec.validate()?;
        if spec.n != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: spec.n,
            });
        }
        budget.check(&grid)?;
        let centers: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.cell_center(i)).collect();
        let factors = spec
            .kernels
            .iter()
            .zip(&spec.maps)
            .map(|(k, a)| Self::factor(&grid, k, a, &centers))
            .collect();
        Ok(KernelEvaluator {
            grid,
            factors,
            centers,
        })
    }

    fn factor(grid: &Grid, k: &KernelSpec, a: &LinearMap, centers: &[Vec<f64>]) -> Factor {
        let n = grid.dim();
        let h = grid.h();
        let avg = k.cell_average(h, n);
        let steps: Option<Vec<AxisStep>> = if a.is_grid_compatible() {
            a.axis_structure().and_then(|ax| {
                ax.iter()
                    .map(|(src, f)| axis_step(grid, *f.numer() as f64 / *f.denom() as f64, *src))
                    .collect()
            })
        } else {
            None
        };
        match steps {
            Some(axes) => {
                let m = grid.cells_per_axis() as i64 - 1;
                let mut offset = [0i64; 2];
                let mut len = [1usize; 2];
                for (i, s) in axes.iter().enumerate() {
                    let cands = [s.e, s.e + s.p * m, s.e - s.r * m, s.e + s.p * m - s.r * m];
                    let lo = *cands.iter().min().unwrap();
                    let hi = *cands.iter().max().unwrap();
                    offset[i] = -lo;
                    len[i] = (hi - lo + 1) as usize;
                }
                let mut tab = vec![0.0; len[0] * len[1]];
                for d1 in 0..len[1] {
                    for d0 in 0..len[0] {
                        let mut rho2 = 0.0;
                        let ds = [d0 as i64 - offset[0], d1 as i64 - offset[1]];
                        for (i, s) in axes.iter().enumerate() {
                            let v = s.q * ds[i] as f64;
                            rho2 += v * v;
                        }
                        let rho = rho2.sqrt();
                        tab[d0 + len[0] * d1] = if rho < h / 4.0 { avg } else { k.eval(rho) };
                    }
                }
                Factor::Table {
                    axes,
                    offset,
                    width: len[0],
                    tab,
                }
            }
            None => Factor::Direct {
                kernel: k.clone(),
                images: centers.iter().map(|c| a.apply_f64(c)).collect(),
            },
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `K(x_c, y_c)` with the singular-cell rule.
    pub fn kernel(&self, x: usize, y: usize) -> f64 {
        let cx = self.grid.coords(x);
        let cy = self.grid.coords(y);
        let h = self.grid.h();
        let mut w = 1.0;
        for f in &self.factors {
            w *= match f {
                Factor::Table {
                    axes,
                    offset,
                    width,
                    tab,
                } => {
                    let mut idx = 0usize;
                    let mut stride = 1usize;
                    for (i, s) in axes.iter().enumerate() {
                        let d = s.e + s.p * cx[i] as i64 - s.r * cy[s.src] as i64 + offset[i];
                        idx += d as usize * stride;
                        stride = *width;
                    }
                    tab[idx]
                }
                Factor::Direct { kernel, images } => {
                    let xc = &self.centers[x];
                    let ay = &images[y];
                    let rho = xc.iter().zip(ay).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    if rho < h / 4.0 {
                        kernel.cell_average(h, self.grid.dim())
                    } else {
                        kernel.eval(rho)
                    }
                }
            };
        }
        w
    }

    /// `Σ_{y ∈ sources} K(x, y) v(y) · |cell|` for each target `x`.
    pub fn eval_at(&self, values: &[f64], sources: &[usize], targets: &[usize]) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        let sources: Vec<usize> = sources.iter().copied().filter(|&y| values[y] != 0.0).collect();
        if self.grid.dim() == 1 && self.factors.iter().all(|f| matches!(f, Factor::Table { .. })) {
            return self.eval_at_1d(values, &sources, targets);
        }
        targets
            .iter()
            .map(|&x| {
                let mut acc = 0.0;
                for &y in &sources {
                    acc += self.kernel(x, y) * values[y];
                }
                acc * vol
            })
            .collect()
    }

    fn eval_at_1d(&self, values: &[f64], sources: &[usize], targets: &[usize]) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        let fac: Vec<(&[f64], i64, i64)> = self
            .factors
            .iter()
            .map(|f| match f {
                Factor::Table { axes, offset, tab, .. } => (tab.as_slice(), axes[0].e + offset[0], axes[0].r),
                Factor::Direct { .. } => unreachable!(),
            })
            .collect();
        let ps: Vec<i64> = self
            .factors
            .iter()
            .map(|f| match f {
                Factor::Table { axes, .. } => axes[0].p,
                Factor::Direct { .. } => unreachable!(),
            })
            .collect();
        let mut out = Vec::with_capacity(targets.len());
        let mut base = vec![0i64; fac.len()];
        for &x in targets {
            for (i, (_, e, _)) in fac.iter().enumerate() {
                base[i] = e + ps[i] * x as i64;
            }
            let mut acc = 0.0;
            match fac.len() {
                2 => {
                    let (t0, _, r0) = fac[0];
                    let (t1, _, r1) = fac[1];
                    let (b0, b1) = (base[0], base[1]);
                    for &y in sources {
                        let yi = y as i64;
                        acc += t0[(b0 - r0 * yi) as usize] * t1[(b1 - r1 * yi) as usize] * values[y];
                    }
                }
                _ => {
                    for &y in sources {
                        let yi = y as i64;
                        let mut w = values[y];
                        for (i, (t, _, r)) in fac.iter().enumerate() {
                            w *= t[(base[i] - r * yi) as usize];
                        }
                        acc += w;
                    }
                }
            }
            out.push(acc * vol);
        }
        out
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid() != self.grid {
            return Err(Error::InvalidArgument("function lives on a different grid".into()));
        }
        let all: Vec<usize> = (0..self.grid.len()).collect();
        let vals = self.eval_at(f.values(), &all, &all);
        GridFunction::from_values(self.grid, vals)
    }
}

/// `T_{α,m} f` by dense cell quadrature.
pub fn apply_t(spec: &OperatorSpec, f: &GridFunction, budget: Budget) -> Result<GridFunction> {
    KernelEvaluator::new(spec, f.grid(), budget)?.apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Cube;
    use approx::assert_relative_eq;

    fn reflect_pair(alpha: f64) -> OperatorSpec {
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
    fn tables_agree_with_direct_evaluation() {
        let g = Grid::new(1, 2, 2).unwrap();
        let spec = OperatorSpec::power_product(
            1,
            0.25,
            &[0.25, 0.5],
            vec![LinearMap::scalar(1, 2, 1).unwrap(), LinearMap::scalar(1, 1, 2).unwrap()],
        )
        .unwrap();
        let ev = KernelEvaluator::new(&spec, g, Budget::guarded()).unwrap();
        let h = g.h();
        for x in 0..g.len() {
            for y in 0..g.len() {
                let xc = g.cell_center(x)[0];
                let yc = g.cell_center(y)[0];
                let mut w = 1.0;
                for (k, a) in spec.kernels.iter().zip([2.0, 0.5]) {
                    let rho = (xc - a * yc).abs();
                    w *= if rho < h / 4.0 { k.cell_average(h, 1) } else { k.eval(rho) };
                }
                assert_relative_eq!(ev.kernel(x, y), w, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn value_at_origin_converges() {
        // T f(0) = ∫_1^2 y^{α-1} dy for f = χ_[1,2)
        let alpha = 0.5;
        let exact = (2f64.powf(alpha) - 1.0) / alpha;
        let mut errs = Vec::new();
        for l in [3, 5, 7] {
            let g = Grid::new(1, 2, l).unwrap();
            let f = GridFunction::indicator(g, &Cube::from_ints(&[1], 1).unwrap()).unwrap();
            let ev = KernelEvaluator::new(&reflect_pair(alpha), g, Budget::guarded()).unwrap();
            // average of the two cells adjacent to 0
            let m = g.cells_per_axis() / 2;
            let v = ev.eval_at(f.values(), &(0..g.len()).collect::<Vec<_>>(), &[m - 1, m]);
            errs.push(((v[0] + v[1]) / 2.0 - exact).abs());
        }
        assert!(errs[2] < errs[0]);
        assert!(errs[2] < 1e-3, "{errs:?}");
    }

    #[test]
    fn budget_refuses_large_grids() {
        let g = Grid::new(1, 4, 11).unwrap();
        let f = GridFunction::zeros(g);
        assert!(matches!(apply_t(&reflect_pair(0.5), &f, Budget::guarded()), Err(Error::Budget(_))));
    }
}
