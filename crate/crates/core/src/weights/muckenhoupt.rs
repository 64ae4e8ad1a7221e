use super::exponents::ExponentSet;
use super::report::WeightConstantReport;
use crate::error::{Error, Result};
use crate::geometry::LinearMap;
use crate::grid::{pullback, BoxSums, CellBox, CubeFamily, Grid, Weight};

/// Box sums of a field that may hold `+inf`; infinite cells are counted apart.
pub(crate) struct SplitSums {
    grid: Grid,
    finite: BoxSums,
    infinite: BoxSums,
    values: Vec<f64>,
}

impl SplitSums {
    pub(crate) fn new(grid: Grid, values: Vec<f64>) -> Self {
        let fin: Vec<f64> = values.iter().map(|&v| if v.is_finite() { v } else { 0.0 }).collect();
        let inf: Vec<f64> = values.iter().map(|&v| if v.is_finite() { 0.0 } else { 1.0 }).collect();
        SplitSums {
            grid,
            finite: BoxSums::new(grid, &fin),
            infinite: BoxSums::new(grid, &inf),
            values,
        }
    }

    /// Integral over the box, `None` when it contains an infinite cell.
    pub(crate) fn mass(&self, b: &CellBox) -> Option<f64> {
        if self.infinite.sum(b) > 0.5 {
            return None;
        }
        Some(self.finite.sum(b).max(0.0) * self.grid.cell_volume())
    }

    pub(crate) fn mean(&self, b: &CellBox) -> Option<f64> {
        self.mass(b).map(|m| m / self.grid.box_volume(b))
    }

    pub(crate) fn max(&self, b: &CellBox) -> f64 {
        let mut m = 0.0f64;
        self.grid.for_each_cell(b, |i| m = m.max(self.values[i]));
        m
    }
}

/// How the second factor of a two-factor constant aggregates.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Aggregate {
    /// `(avg_Q V)^e`.
    Mean(f64),
    /// `(max_Q V)^e`.
    Max(f64),
}

/// `sup_Q (avg_Q U)^{eu} · agg_Q(V)` over a family; degenerate cubes are skipped.
pub(crate) fn two_factor_sup(
    check: &str,
    family: &CubeFamily,
    u: &SplitSums,
    eu: f64,
    v: &SplitSums,
    agg: Aggregate,
) -> Result<WeightConstantReport> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let grid = family.grid();
    let mut report = WeightConstantReport::new(check, family.label(), grid);
    family.for_each(|b| {
        let first = u.mean(&b).map(|m| m.powf(eu));
        let second = match agg {
            Aggregate::Mean(e) => v.mean(&b).map(|m| m.powf(e)),
            Aggregate::Max(e) => {
                let m = v.max(&b);
                m.is_finite().then(|| m.powf(e))
            }
        };
        let val = match (first, second) {
            (Some(a), Some(c)) if a > 0.0 && c > 0.0 => Some(a * c),
            _ => None,
        };
        report.offer(b, val);
    });
    Ok(report)
}

fn check_grid(w: &Weight, family: &CubeFamily) -> Result<()> {
    if w.grid() != family.grid() {
        return Err(Error::InvalidArgument("weight and family live on different grids".into()));
    }
    Ok(())
}

/// Cell values of `x ↦ w(Ax)^q`, formed by pulling back `w^q`.
pub fn twisted_power(w: &Weight, a: &LinearMap, q: f64) -> Result<Weight> {
    let powered = w.pow(q);
    if a.is_identity() {
        return Ok(powered);
    }
    if powered.has_infinite() {
        return Err(Error::InvalidArgument("cannot pull back a weight with infinite cells".into()));
    }
    Weight::new(pullback(powered.as_function(), a)?.func)
}

/// `sup_Q (avg_Q w_A^q)^{1/q} (avg_Q w^{-p'})^{1/p'}`, or with `max_Q w^{-1}` when `p = 1`.
pub fn matrix_apq_constant(
    w: &Weight,
    a: &LinearMap,
    e: &ExponentSet,
    family: &CubeFamily,
) -> Result<WeightConstantReport> {
    check_grid(w, family)?;
    let grid = w.grid();
    let u = SplitSums::new(grid, twisted_power(w, a, e.q())?.values().to_vec());
    let (v, agg) = if e.p() == 1.0 {
        (w.pow(-1.0), Aggregate::Max(1.0))
    } else {
        let pc = e.p_conj();
        (w.pow(-pc), Aggregate::Mean(1.0 / pc))
    };
    let v = SplitSums::new(grid, v.values().to_vec());
    let check = if a.is_identity() { "apq" } else { "matrix-apq" };
    two_factor_sup(check, family, &u, 1.0 / e.q(), &v, agg)
}

pub fn apq_constant(w: &Weight, e: &ExponentSet, family: &CubeFamily) -> Result<WeightConstantReport> {
    matrix_apq_constant(w, &LinearMap::identity(w.grid().dim())?, e, family)
}

/// `sup_Q avg_Q(W_A) · (avg_Q W^{-1/(p-1)})^{p-1}`, with `max_Q W^{-1}` at `p = 1`:
/// the single-exponent class constant written on `W` itself.
pub fn muckenhoupt_constant(w: &Weight, a: &LinearMap, p: f64, family: &CubeFamily) -> Result<WeightConstantReport> {
    check_grid(w, family)?;
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::InvalidArgument(format!("p = {p} must be in [1, inf)")));
    }
    let grid = w.grid();
    let u = SplitSums::new(grid, twisted_power(w, a, 1.0)?.values().to_vec());
    let (v, agg) = if p == 1.0 {
        (w.pow(-1.0), Aggregate::Max(1.0))
    } else {
        (w.pow(-1.0 / (p - 1.0)), Aggregate::Mean(p - 1.0))
    };
    let v = SplitSums::new(grid, v.values().to_vec());
    let check = if a.is_identity() { "ap" } else { "matrix-ap" };
    two_factor_sup(check, family, &u, 1.0, &v, agg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightRecipe;
    use approx::assert_relative_eq;

    fn e22() -> ExponentSet {
        ExponentSet::new(1, 0.0, 2.0, 2.0).unwrap()
    }

    #[test]
    fn constant_weight_gives_one() {
        for n in 1..=2 {
            let g = Grid::new(n, 1, 1).unwrap();
            let w = Weight::constant(g, 3.5).unwrap();
            let fam = CubeFamily::lattice_union(g);
            for (p, q) in [(1.0, 1.0), (2.0, 2.0), (1.5, 4.0)] {
                let e = ExponentSet::new(n, 0.0, p, q).unwrap();
                let r = apq_constant(&w, &e, &fam).unwrap();
                assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
                assert_eq!(r.skipped, 0);
            }
        }
    }

    #[test]
    fn reflection_of_even_weight_is_invisible() {
        let g = Grid::new(1, 2, 3).unwrap();
        let w = WeightRecipe::power(0.3).build(g).unwrap();
        let fam = CubeFamily::lattice_union(g);
        let plain = apq_constant(&w, &e22(), &fam).unwrap();
        let twisted = matrix_apq_constant(&w, &LinearMap::scalar(1, -1, 1).unwrap(), &e22(), &fam).unwrap();
        assert_relative_eq!(plain.value, twisted.value, max_relative = 1e-12);
    }

    #[test]
    fn zero_cells_are_skipped() {
        let g = Grid::new(1, 1, 1).unwrap();
        let mut vals = vec![1.0; g.len()];
        vals[3] = 0.0;
        let w = Weight::new(crate::grid::GridFunction::from_values(g, vals).unwrap()).unwrap();
        let r = apq_constant(&w, &e22(), &CubeFamily::reference(g)).unwrap();
        assert!(r.skipped > 0);
        assert!(!r.is_valid());
        assert!(r.diverging());
    }

    #[test]
    fn muckenhoupt_form_is_power_of_the_pq_form() {
        let g = Grid::new(1, 2, 2).unwrap();
        let w = WeightRecipe::power(0.4).build(g).unwrap();
        let fam = CubeFamily::all_intervals(g).unwrap();
        let a = LinearMap::scalar(1, 2, 1).unwrap();
        let p = 3.0;
        let pq = matrix_apq_constant(&w, &a, &ExponentSet::new(1, 0.0, p, p).unwrap(), &fam).unwrap();
        let big_w = w.pow(p);
        let m = muckenhoupt_constant(&big_w, &a, p, &fam).unwrap();
        assert_relative_eq!(m.value, pq.value.powf(p), max_relative = 1e-10);
    }
}
