//! Piecewise-constant fields on a uniform grid over `[-2^J, 2^J)^n`.

mod family;
mod field;
mod pullback;
mod sums;

pub use family::{CubeFamily, FamilyKind, LatticeTree};
pub use field::{
    integrate, lp_norm, lr_average, weighted_level_measure, CellMask, GridFunction, Region, Weight,
};
pub use pullback::{pullback, pullback_mode, Pullback, PullbackMode};
pub use sums::BoxSums;

use crate::error::{Error, Result};
use crate::geometry::{Cube, DyadicRational};

const MAX_AXIS_BITS: i32 = 22;

/// Uniform grid: box half-width `2^J`, cell side `2^{-L}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    n: usize,
    j: i32,
    l: i32,
}

/// A grid-aligned cube in cell units: lower cell coordinates and side in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellBox {
    pub lo: [usize; 2],
    pub side: usize,
    pub n: usize,
}

impl CellBox {
    pub fn new(n: usize, lo: [usize; 2], side: usize) -> Self {
        let lo = if n == 1 { [lo[0], 0] } else { lo };
        CellBox { lo, side, n }
    }

    pub fn cell_count(&self) -> usize {
        self.side.pow(self.n as u32)
    }

    pub fn contains(&self, other: &CellBox) -> bool {
        (0..self.n).all(|i| self.lo[i] <= other.lo[i] && other.lo[i] + other.side <= self.lo[i] + self.side)
    }

    pub fn contains_coords(&self, c: &[usize]) -> bool {
        (0..self.n).all(|i| self.lo[i] <= c[i] && c[i] < self.lo[i] + self.side)
    }

    pub fn intersects(&self, other: &CellBox) -> bool {
        (0..self.n).all(|i| self.lo[i] < other.lo[i] + other.side && other.lo[i] < self.lo[i] + self.side)
    }

    /// Overlap rectangle `[lo, hi)`, if nonempty.
    pub fn overlap(&self, other: &CellBox) -> Option<([usize; 2], [usize; 2])> {
        let mut lo = [0usize; 2];
        let mut hi = [1usize; 2];
        for i in 0..self.n {
            lo[i] = self.lo[i].max(other.lo[i]);
            hi[i] = (self.lo[i] + self.side).min(other.lo[i] + other.side);
            if lo[i] >= hi[i] {
                return None;
            }
        }
        Some((lo, hi))
    }

    /// Concentric dilate by an odd integer factor, `None` if it leaves `[0, cpa)`.
    pub fn dilate_odd(&self, factor: usize, cpa: usize) -> Option<CellBox> {
        let pad = self.side * (factor - 1) / 2;
        let mut lo = [0usize; 2];
        for i in 0..self.n {
            lo[i] = self.lo[i].checked_sub(pad)?;
            if lo[i] + self.side * factor > cpa {
                return None;
            }
        }
        Some(CellBox::new(self.n, lo, self.side * factor))
    }

    /// The `2^n` halves, if the side is even.
    pub fn children(&self) -> Option<Vec<CellBox>> {
        if self.side < 2 || !self.side.is_multiple_of(2) {
            return None;
        }
        let h = self.side / 2;
        Some(
            (0..(1usize << self.n))
                .map(|m| {
                    let mut lo = self.lo;
                    for (i, v) in lo.iter_mut().enumerate().take(self.n) {
                        if m >> i & 1 == 1 {
                            *v += h;
                        }
                    }
                    CellBox::new(self.n, lo, h)
                })
                .collect(),
        )
    }
}

impl Grid {
    pub fn new(n: usize, j: i32, l: i32) -> Result<Self> {
        if n == 0 || n > 2 {
            return Err(Error::Dimension(n));
        }
        let bits = j + l + 1;
        if !(1..=MAX_AXIS_BITS).contains(&bits) || j.abs() > 40 || l.abs() > 40 {
            return Err(Error::InvalidArgument(format!(
                "grid J={j}, L={l} gives 2^{bits} cells per axis"
            )));
        }
        Ok(Grid { n, j, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_width_exp(&self) -> i32 {
        self.j
    }

    pub fn level(&self) -> i32 {
        self.l
    }

    pub fn refined(&self) -> Grid {
        Grid { l: self.l + 1, ..*self }
    }

    pub fn cells_per_axis(&self) -> usize {
        1usize << (self.j + self.l + 1)
    }

    pub fn len(&self) -> usize {
        self.cells_per_axis().pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (-self.l as f64).exp2()
    }

    pub fn h_exact(&self) -> DyadicRational {
        DyadicRational::pow2(-self.l)
    }

    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.n as i32)
    }

    pub fn half_width(&self) -> f64 {
        (self.j as f64).exp2()
    }

    pub fn box_cube(&self) -> Cube {
        let w = DyadicRational::pow2(self.j);
        Cube::new(vec![-w; self.n], w.mul_int(2)).expect("positive side")
    }

    pub fn full_box(&self) -> CellBox {
        CellBox::new(self.n, [0, 0], self.cells_per_axis())
    }

    pub fn index(&self, c: &[usize]) -> usize {
        if self.n == 1 {
            c[0]
        } else {
            c[0] + self.cells_per_axis() * c[1]
        }
    }

    pub fn coords(&self, idx: usize) -> [usize; 2] {
        let m = self.cells_per_axis();
        if self.n == 1 {
            [idx, 0]
        } else {
            [idx % m, idx / m]
        }
    }

    /// Lower coordinate of cell `k` along an axis.
    pub fn axis_lo(&self, k: usize) -> f64 {
        -self.half_width() + k as f64 * self.h()
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let c = self.coords(idx);
        (0..self.n).map(|i| self.axis_lo(c[i]) + 0.5 * self.h()).collect()
    }

    pub fn cell_cube(&self, idx: usize) -> Cube {
        self.cube_of(&CellBox::new(self.n, self.coords(idx), 1))
    }

    pub fn cube_of(&self, b: &CellBox) -> Cube {
        let h = self.h_exact();
        let w = DyadicRational::pow2(self.j);
        let corner = (0..self.n).map(|i| h.mul_int(b.lo[i] as i64) - w).collect();
        Cube::new(corner, h.mul_int(b.side as i64)).expect("positive side")
    }

    /// Cell containing a point, `None` outside the box.
    pub fn cell_of_point(&self, x: &[f64]) -> Option<usize> {
        let m = self.cells_per_axis();
        let mut c = [0usize; 2];
        for i in 0..self.n {
            let t = ((x[i] + self.half_width()) / self.h()).floor();
            if !(t >= 0.0 && t < m as f64) {
                return None;
            }
            c[i] = t as usize;
        }
        Some(self.index(&c))
    }

    /// Cell box of a grid-aligned cube inside the grid box.
    pub fn cell_box(&self, q: &Cube) -> Result<CellBox> {
        if q.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: q.dim(),
            });
        }
        let h = self.h_exact();
        if !q.side().is_multiple_of(&h) {
            return Err(Error::Alignment(format!("side of {q} is not a multiple of the cell side")));
        }
        let w = DyadicRational::pow2(self.j);
        let mut lo = [0usize; 2];
        for i in 0..self.n {
            let off = q.corner()[i] + w;
            if !off.is_multiple_of(&h) {
                return Err(Error::Alignment(format!("{q} is not aligned to the grid")));
            }
            let k = off.floor_div(&h);
            if k < 0 {
                return Err(Error::OutOfRange(format!("{q} leaves the grid box")));
            }
            lo[i] = k as usize;
        }
        let side = q.side().floor_div(&h) as usize;
        let b = CellBox::new(self.n, lo, side);
        if !self.full_box().contains(&b) {
            return Err(Error::OutOfRange(format!("{q} leaves the grid box")));
        }
        Ok(b)
    }

    /// Linear indices of the cells of a box, axis 0 fastest.
    pub fn cells_of(&self, b: &CellBox) -> Vec<usize> {
        let m = self.cells_per_axis();
        if self.n == 1 {
            (b.lo[0]..b.lo[0] + b.side).collect()
        } else {
            let mut v = Vec::with_capacity(b.side * b.side);
            for y in b.lo[1]..b.lo[1] + b.side {
                for x in b.lo[0]..b.lo[0] + b.side {
                    v.push(x + m * y);
                }
            }
            v
        }
    }

    /// Calls `f` for every cell of a box.
    pub fn for_each_cell(&self, b: &CellBox, mut f: impl FnMut(usize)) {
        let m = self.cells_per_axis();
        if self.n == 1 {
            (b.lo[0]..b.lo[0] + b.side).for_each(f);
        } else {
            for y in b.lo[1]..b.lo[1] + b.side {
                let row = m * y;
                for x in b.lo[0]..b.lo[0] + b.side {
                    f(row + x);
                }
            }
        }
    }

    pub fn box_volume(&self, b: &CellBox) -> f64 {
        b.cell_count() as f64 * self.cell_volume()
    }
}
