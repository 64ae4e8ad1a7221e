use std::path::Path;

use super::{CellBox, Grid};
use crate::error::{Error, Result};
use crate::geometry::Cube;

/// Piecewise-constant field, one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        GridFunction {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} cell values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at cell {i}")));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(&grid.cell_center(i))).collect();
        Self::from_values(grid, values)
    }

    /// Indicator of a grid-aligned cube.
    pub fn indicator(grid: Grid, q: &Cube) -> Result<Self> {
        let b = grid.cell_box(q)?;
        Ok(Self::indicator_box(grid, &b))
    }

    pub fn indicator_box(grid: Grid, b: &CellBox) -> Self {
        let mut f = Self::zeros(grid);
        grid.for_each_cell(b, |i| f.values[i] = 1.0);
        f
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.same_grid(other.grid)?;
        Ok(GridFunction::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn restrict(&self, mask: &CellMask) -> Result<GridFunction> {
        self.same_grid(mask.grid())?;
        Ok(GridFunction::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(mask.bits())
                .map(|(&v, &b)| if b { v } else { 0.0 })
                .collect(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn support(&self) -> CellMask {
        CellMask::from_bits(self.grid, self.values.iter().map(|&v| v != 0.0).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `∫ f` over the whole box.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub(crate) fn same_grid(&self, g: Grid) -> Result<()> {
        if self.grid != g {
            return Err(Error::InvalidArgument(format!(
                "grid mismatch: {:?} vs {:?}",
                self.grid, g
            )));
        }
        Ok(())
    }

    /// CSV with one column per axis index and a value column.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.grid.dim()).map(|i| format!("i{i}")).collect();
        header.push("value".into());
        w.write_record(&header)?;
        for (idx, v) in self.values.iter().enumerate() {
            let c = self.grid.coords(idx);
            let mut rec: Vec<String> = c[..self.grid.dim()].iter().map(|k| k.to_string()).collect();
            rec.push(format!("{v:e}"));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(grid: Grid, path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut values = vec![0.0; grid.len()];
        let n = grid.dim();
        let m = grid.cells_per_axis();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != n + 1 {
                return Err(Error::Parse(format!("expected {} columns, got {}", n + 1, rec.len())));
            }
            let mut c = [0usize; 2];
            for (i, ci) in c.iter_mut().enumerate().take(n) {
                *ci = rec[i]
                    .trim()
                    .parse()
                    .map_err(|e| Error::Parse(format!("cell index '{}': {e}", &rec[i])))?;
                if *ci >= m {
                    return Err(Error::OutOfRange(format!("cell index {} >= {m}", *ci)));
                }
            }
            values[grid.index(&c)] = rec[n]
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("value '{}': {e}", &rec[n])))?;
        }
        Self::from_values(grid, values)
    }
}

/// Nonnegative field. Values may be `+inf` after negative powers of zero cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight(GridFunction);

impl Weight {
    pub fn new(f: GridFunction) -> Result<Self> {
        if let Some(i) = f.values.iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(format!("negative weight value at cell {i}")));
        }
        Ok(Weight(f))
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(GridFunction::constant(grid, c))
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        Weight(GridFunction::from_raw(grid, values))
    }

    pub fn grid(&self) -> Grid {
        self.0.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.0.values
    }

    pub fn as_function(&self) -> &GridFunction {
        &self.0
    }

    /// Cellwise power; `0^e` with `e < 0` gives `+inf`.
    pub fn pow(&self, e: f64) -> Weight {
        Weight::from_raw(
            self.grid(),
            self.values()
                .iter()
                .map(|&v| if e == 0.0 { 1.0 } else { v.powf(e) })
                .collect(),
        )
    }

    pub fn mul(&self, other: &Weight) -> Result<Weight> {
        self.0.same_grid(other.grid())?;
        Ok(Weight::from_raw(
            self.grid(),
            self.values().iter().zip(other.values()).map(|(a, b)| a * b).collect(),
        ))
    }

    pub fn has_infinite(&self) -> bool {
        self.values().iter().any(|v| v.is_infinite())
    }

    /// `w(Q) = ∫_Q w`.
    pub fn mass(&self, b: &CellBox) -> f64 {
        let mut s = 0.0;
        self.grid().for_each_cell(b, |i| s += self.0.values[i]);
        s * self.grid().cell_volume()
    }
}

/// Set of cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMask {
    grid: Grid,
    bits: Vec<bool>,
}

impl CellMask {
    pub fn empty(grid: Grid) -> Self {
        CellMask {
            grid,
            bits: vec![false; grid.len()],
        }
    }

    pub fn from_bits(grid: Grid, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), grid.len(), "mask length");
        CellMask { grid, bits }
    }

    pub fn from_box(grid: Grid, b: &CellBox) -> Self {
        let mut m = Self::empty(grid);
        m.insert_box(b);
        m
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn insert_box(&mut self, b: &CellBox) {
        let grid = self.grid;
        grid.for_each_cell(b, |i| self.bits[i] = true);
    }

    pub fn remove_box(&mut self, b: &CellBox) {
        let grid = self.grid;
        grid.for_each_cell(b, |i| self.bits[i] = false);
    }

    pub fn union_with(&mut self, other: &CellMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &CellMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a &= b;
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn count_in(&self, b: &CellBox) -> usize {
        let mut c = 0;
        self.grid.for_each_cell(b, |i| c += self.bits[i] as usize);
        c
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Smallest cell box containing the set.
    pub fn bounding_box(&self) -> Option<([usize; 2], [usize; 2])> {
        let mut lo = [usize::MAX; 2];
        let mut hi = [0usize; 2];
        let n = self.grid.dim();
        let mut any = false;
        for i in self.indices() {
            any = true;
            let c = self.grid.coords(i);
            for a in 0..n {
                lo[a] = lo[a].min(c[a]);
                hi[a] = hi[a].max(c[a]);
            }
        }
        if n == 1 {
            lo[1] = 0;
        }
        any.then_some((lo, hi))
    }
}

/// Integration domain.
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Cube(&'a Cube),
    Cells(&'a CellBox),
    Mask(&'a CellMask),
}

/// Exact cell-sum quadrature over a grid-aligned region.
pub fn integrate(f: &GridFunction, region: Region<'_>) -> Result<f64> {
    let g = f.grid();
    let mut s = 0.0;
    match region {
        Region::Cube(q) => {
            let b = g.cell_box(q)?;
            g.for_each_cell(&b, |i| s += f.values[i]);
        }
        Region::Cells(b) => g.for_each_cell(b, |i| s += f.values[i]),
        Region::Mask(m) => {
            f.same_grid(m.grid())?;
            for i in m.indices() {
                s += f.values[i];
            }
        }
    }
    Ok(s * g.cell_volume())
}

fn box_lr_average(f: &GridFunction, b: &CellBox, r: f64) -> f64 {
    let g = f.grid();
    if r.is_infinite() {
        let mut m = 0.0f64;
        g.for_each_cell(b, |i| m = m.max(f.values[i].abs()));
        return m;
    }
    let mut s = 0.0;
    if r == 1.0 {
        g.for_each_cell(b, |i| s += f.values[i].abs());
        s / b.cell_count() as f64
    } else {
        g.for_each_cell(b, |i| s += f.values[i].abs().powf(r));
        (s / b.cell_count() as f64).powf(1.0 / r)
    }
}

/// `((1/|Q|) ∫_Q |f|^r)^{1/r}`, the max of `|f|` when `r = ∞`.
pub fn lr_average(f: &GridFunction, q: &Cube, r: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!("exponent {r} must be in [1, inf]")));
    }
    let b = f.grid().cell_box(q)?;
    Ok(box_lr_average(f, &b, r))
}

/// `∫_{g > λ} w`.
pub fn weighted_level_measure(w: &Weight, g: &GridFunction, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("level {lambda} must be positive")));
    }
    w.as_function().same_grid(g.grid())?;
    let s: f64 = g
        .values()
        .iter()
        .zip(w.values())
        .filter(|(&gv, _)| gv > lambda)
        .map(|(_, &wv)| wv)
        .sum();
    Ok(s * g.grid().cell_volume())
}

/// `(∫ |f|^p w)^{1/p}`; the weight is passed already powered.
pub fn lp_norm(f: &GridFunction, w: &Weight, p: f64) -> Result<f64> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::InvalidArgument(format!("exponent {p} must be in [1, inf)")));
    }
    f.same_grid(w.grid())?;
    let s: f64 = f
        .values()
        .iter()
        .zip(w.values())
        .map(|(&v, &wv)| if v == 0.0 { 0.0 } else { v.abs().powf(p) * wv })
        .sum();
    Ok((s * f.grid().cell_volume()).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid1() -> Grid {
        Grid::new(1, 2, 2).unwrap()
    }

    #[test]
    fn integrate_examples() {
        let g = grid1();
        let q = Cube::from_ints(&[0], 4).unwrap();
        let f = GridFunction::constant(g, 2.5);
        assert_relative_eq!(integrate(&f, Region::Cube(&q)).unwrap(), 10.0);
        let half = GridFunction::indicator(g, &Cube::from_ints(&[0], 2).unwrap()).unwrap();
        assert_relative_eq!(integrate(&half, Region::Cube(&q)).unwrap(), 2.0);
        assert_eq!(integrate(&f, Region::Mask(&CellMask::empty(g))).unwrap(), 0.0);
    }

    #[test]
    fn averages() {
        let g = grid1();
        let q = Cube::from_ints(&[0], 2).unwrap();
        let f = GridFunction::constant(g, 3.0);
        for r in [1.0, 2.0, 7.5, f64::INFINITY] {
            assert_relative_eq!(lr_average(&f, &q, r).unwrap(), 3.0, max_relative = 1e-14);
        }
        let half = GridFunction::indicator(g, &Cube::from_ints(&[0], 1).unwrap()).unwrap();
        assert_relative_eq!(lr_average(&half, &q, 2.0).unwrap(), 0.5f64.sqrt());
        assert_eq!(lr_average(&half, &q, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn level_measure_and_norm() {
        let g = grid1();
        let e = Cube::from_ints(&[-1], 2).unwrap();
        let w = Weight::constant(g, 1.0).unwrap();
        let chi = GridFunction::indicator(g, &e).unwrap();
        assert_relative_eq!(weighted_level_measure(&w, &chi.scale(2.0), 1.0).unwrap(), 2.0);
        assert_eq!(weighted_level_measure(&w, &chi, 5.0).unwrap(), 0.0);
        assert_relative_eq!(lp_norm(&chi, &w, 2.0).unwrap(), 2f64.sqrt());
        assert_eq!(lp_norm(&GridFunction::zeros(g), &w, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::new(2, 0, 1).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] - 3.0 * x[1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        f.write_csv(&p).unwrap();
        assert_eq!(GridFunction::read_csv(g, &p).unwrap(), f);
    }
}
