use crate::error::{Error, Result};
use crate::grid::{CellBox, CellMask};

/// Post-conditions of a Calderón–Zygmund selection, in cell counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CzAudit {
    pub height: f64,
    pub root_cells: usize,
    pub mask_cells: usize,
    pub selected_cells: usize,
    /// Largest mask average over a selected cube (≤ 2^n·height).
    pub max_selected_average: f64,
    /// Mask cells not covered by the selection.
    pub uncovered_cells: usize,
}

impl CzAudit {
    pub fn passed(&self, n: usize) -> bool {
        let bound = 2f64.powi(n as i32) * self.height;
        self.max_selected_average <= bound
            && self.selected_cells as f64 * self.height <= self.mask_cells as f64
            && self.uncovered_cells == 0
    }
}

/// Maximal dyadic subcubes of `root` on which the mask average exceeds `height`.
pub fn cz_decompose(mask: &CellMask, root: &CellBox, height: f64) -> Result<Vec<CellBox>> {
    if !(height > 0.0 && height < 1.0) {
        return Err(Error::InvalidArgument(format!("height {height} outside (0, 1)")));
    }
    let grid = mask.grid();
    if root.n != grid.dim() || !grid.full_box().contains(root) || !root.side.is_power_of_two() {
        return Err(Error::Alignment(format!("root {root:?} is not a dyadic cube of the grid")));
    }
    let avg = |b: &CellBox| mask.count_in(b) as f64 / b.cell_count() as f64;
    if avg(root) > height {
        return Err(Error::InvalidArgument(format!(
            "mask average {} over the root exceeds height {height}; raise the threshold first",
            avg(root)
        )));
    }
    let mut out = Vec::new();
    let mut stack = vec![*root];
    while let Some(b) = stack.pop() {
        let Some(children) = b.children() else {
            continue;
        };
        for c in children.into_iter().rev() {
            let a = avg(&c);
            if a > height {
                out.push(c);
            } else if a > 0.0 {
                stack.push(c);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Measures the selection against its three post-conditions.
pub fn audit_cz(mask: &CellMask, root: &CellBox, height: f64, selected: &[CellBox]) -> CzAudit {
    let grid = mask.grid();
    let mut covered = CellMask::empty(grid);
    let mut max_avg = 0.0f64;
    let mut sel = 0;
    for b in selected {
        covered.insert_box(b);
        sel += b.cell_count();
        max_avg = max_avg.max(mask.count_in(b) as f64 / b.cell_count() as f64);
    }
    let mut uncovered = 0;
    grid.for_each_cell(root, |i| {
        if mask.get(i) && !covered.get(i) {
            uncovered += 1;
        }
    });
    CzAudit {
        height,
        root_cells: root.cell_count(),
        mask_cells: mask.count_in(root),
        selected_cells: sel,
        max_selected_average: max_avg,
        uncovered_cells: uncovered,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid() -> Grid {
        Grid::new(1, 2, 2).unwrap()
    }

    #[test]
    fn empty_mask_selects_nothing() {
        let g = grid();
        let root = g.full_box();
        assert!(cz_decompose(&CellMask::empty(g), &root, 0.25).unwrap().is_empty());
    }

    #[test]
    fn single_cell_picks_the_smallest_heavy_ancestor() {
        let g = grid();
        let root = g.full_box();
        let mut m = CellMask::empty(g);
        m.set(13, true);
        let sel = cz_decompose(&m, &root, 0.25).unwrap();
        // ancestors of cell 13: sides 1, 2, 4, 8, ...; 1/side > 1/4 first fails at 4,
        // so the maximal one is the side-2 cube [12, 14)
        assert_eq!(sel, vec![CellBox::new(1, [12, 0], 2)]);
        assert!(audit_cz(&m, &root, 0.25, &sel).passed(1));
    }

    #[test]
    fn heavy_root_is_rejected() {
        let g = grid();
        let m = CellMask::from_box(g, &CellBox::new(1, [0, 0], 16));
        assert!(cz_decompose(&m, &g.full_box(), 0.25).is_err());
    }

    #[test]
    fn audit_on_a_scattered_mask() {
        let g = Grid::new(2, 1, 2).unwrap();
        let root = g.full_box();
        let mut m = CellMask::empty(g);
        for i in [0, 9, 17, 40, 41, 63] {
            m.set(i, true);
        }
        let h = 1.0 / 8.0;
        let sel = cz_decompose(&m, &root, h).unwrap();
        let a = audit_cz(&m, &root, h, &sel);
        assert!(a.passed(2), "{a:?}");
        assert!(a.selected_cells as f64 <= a.mask_cells as f64 / h);
    }
}
