use std::fmt;

use crate::geometry::{Cube, DyadicRational};
use crate::grid::{CellBox, Grid};

/// Grid-aligned cube in cell units that may stick out of the grid box.
///
/// Sparse families hold triples of cubes near the boundary, so the lower
/// corner is signed; data outside the box is read as zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SparseCube {
    pub lo: [i64; 2],
    pub side: usize,
    pub n: usize,
}

impl SparseCube {
    pub fn new(n: usize, lo: [i64; 2], side: usize) -> Self {
        let lo = if n == 1 { [lo[0], 0] } else { lo };
        SparseCube { lo, side, n }
    }

    pub fn from_box(b: &CellBox) -> Self {
        SparseCube::new(b.n, [b.lo[0] as i64, b.lo[1] as i64], b.side)
    }

    pub fn triple(&self) -> Self {
        let s = self.side as i64;
        SparseCube::new(self.n, [self.lo[0] - s, self.lo[1] - s], 3 * self.side)
    }

    pub fn cell_count(&self) -> usize {
        self.side.pow(self.n as u32)
    }

    pub fn volume(&self, grid: &Grid) -> f64 {
        self.cell_count() as f64 * grid.cell_volume()
    }

    pub fn contains(&self, other: &SparseCube) -> bool {
        (0..self.n).all(|i| {
            self.lo[i] <= other.lo[i] && other.lo[i] + other.side as i64 <= self.lo[i] + self.side as i64
        })
    }

    pub fn contains_coords(&self, c: &[i64]) -> bool {
        (0..self.n).all(|i| self.lo[i] <= c[i] && c[i] < self.lo[i] + self.side as i64)
    }

    /// Part inside the grid box as `[lo, hi)` cell ranges.
    pub fn clip(&self, grid: &Grid) -> Option<([usize; 2], [usize; 2])> {
        let m = grid.cells_per_axis() as i64;
        let mut lo = [0usize; 2];
        let mut hi = [1usize; 2];
        for i in 0..self.n {
            let a = self.lo[i].max(0);
            let b = (self.lo[i] + self.side as i64).min(m);
            if a >= b {
                return None;
            }
            lo[i] = a as usize;
            hi[i] = b as usize;
        }
        Some((lo, hi))
    }

    /// The cube as a cell box, when it lies inside the grid box.
    pub fn as_box(&self, grid: &Grid) -> Option<CellBox> {
        let m = grid.cells_per_axis() as i64;
        let inside = (0..self.n).all(|i| self.lo[i] >= 0 && self.lo[i] + self.side as i64 <= m);
        inside.then(|| CellBox::new(self.n, [self.lo[0] as usize, self.lo[1] as usize], self.side))
    }

    /// Exact geometric cube.
    pub fn to_cube(&self, grid: &Grid) -> Cube {
        let h = grid.h_exact();
        let w = DyadicRational::pow2(grid.half_width_exp());
        let corner = (0..self.n).map(|i| h.mul_int(self.lo[i]) - w).collect();
        Cube::new(corner, h.mul_int(self.side as i64)).expect("positive side")
    }

    /// Calls `f` with every cell of the clipped cube.
    pub fn for_each_cell(&self, grid: &Grid, mut f: impl FnMut(usize)) {
        let Some((lo, hi)) = self.clip(grid) else {
            return;
        };
        let m = grid.cells_per_axis();
        for y in lo[1]..hi[1] {
            for x in lo[0]..hi[0] {
                f(x + m * y);
            }
        }
    }
}

impl fmt::Display for SparseCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n == 1 {
            write!(f, "{}+{}", self.lo[0], self.side)
        } else {
            write!(f, "{},{}+{}", self.lo[0], self.lo[1], self.side)
        }
    }
}

impl std::str::FromStr for SparseCube {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let bad = || crate::Error::Parse(format!("cube `{s}` is not `lo+side` or `x,y+side`"));
        let (lo, side) = s.split_once('+').ok_or_else(bad)?;
        let side: usize = side.trim().parse().map_err(|_| bad())?;
        let lo: Vec<i64> = lo
            .split(',')
            .map(|t| t.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match lo.len() {
            1 => Ok(SparseCube::new(1, [lo[0], 0], side)),
            2 => Ok(SparseCube::new(2, [lo[0], lo[1]], side)),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_clips_at_the_box() {
        let g = Grid::new(1, 1, 1).unwrap();
        let q = SparseCube::new(1, [0, 0], 2);
        let t = q.triple();
        assert_eq!(t.lo[0], -2);
        assert_eq!(t.clip(&g), Some(([0, 0], [4, 1])));
        assert!(t.as_box(&g).is_none());
        assert_eq!(t.to_cube(&g), q.to_cube(&g).triple());
    }

    #[test]
    fn text_round_trip() {
        let q = SparseCube::new(2, [-3, 5], 4);
        assert_eq!(q.to_string().parse::<SparseCube>().unwrap(), q);
    }
}
