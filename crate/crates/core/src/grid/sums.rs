use super::{CellBox, Grid};

/// Prefix sums (summed-area table in the plane) for O(1) box sums.
#[derive(Debug, Clone)]
pub struct BoxSums {
    grid: Grid,
    table: Vec<f64>,
    stride: usize,
}

impl BoxSums {
    pub fn new(grid: Grid, values: &[f64]) -> Self {
        let m = grid.cells_per_axis();
        let stride = m + 1;
        if grid.dim() == 1 {
            let mut table = vec![0.0; stride];
            for i in 0..m {
                table[i + 1] = table[i] + values[i];
            }
            BoxSums { grid, table, stride }
        } else {
            let mut table = vec![0.0; stride * stride];
            for y in 0..m {
                let mut row = 0.0;
                for x in 0..m {
                    row += values[x + m * y];
                    table[(x + 1) + stride * (y + 1)] = table[(x + 1) + stride * y] + row;
                }
            }
            BoxSums { grid, table, stride }
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Plain sum of cell values over the box.
    pub fn sum(&self, b: &CellBox) -> f64 {
        if self.grid.dim() == 1 {
            self.table[b.lo[0] + b.side] - self.table[b.lo[0]]
        } else {
            let s = self.stride;
            let (x0, y0) = (b.lo[0], b.lo[1]);
            let (x1, y1) = (x0 + b.side, y0 + b.side);
            self.table[x1 + s * y1] - self.table[x0 + s * y1] - self.table[x1 + s * y0]
                + self.table[x0 + s * y0]
        }
    }

    /// Sum over the axis-aligned rectangle `[lo, hi)` in cell coordinates.
    pub fn rect_sum(&self, lo: [usize; 2], hi: [usize; 2]) -> f64 {
        if self.grid.dim() == 1 {
            self.table[hi[0]] - self.table[lo[0]]
        } else {
            let s = self.stride;
            self.table[hi[0] + s * hi[1]] - self.table[lo[0] + s * hi[1]] - self.table[hi[0] + s * lo[1]]
                + self.table[lo[0] + s * lo[1]]
        }
    }

    /// Sum over a 1-D cell range `[a, b)`.
    pub fn range(&self, a: usize, b: usize) -> f64 {
        self.table[b] - self.table[a]
    }

    /// Mean over the box of nonnegative data, clamped at zero against cancellation.
    pub fn nonneg_mean(&self, b: &CellBox) -> f64 {
        (self.sum(b) / b.cell_count() as f64).max(0.0)
    }
}
