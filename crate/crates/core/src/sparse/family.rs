use super::SparseCube;
use crate::error::{Error, Result};
use crate::grid::{CellMask, Grid};

/// Cubes with (optional) disjoint witness sets `E_Q ⊂ Q`, `|E_Q| ≥ η|Q|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseFamily {
    grid: Grid,
    tag: Option<usize>,
    cubes: Vec<SparseCube>,
    witnesses: Option<Vec<CellMask>>,
    eta: f64,
}

impl SparseFamily {
    /// Family on the standard dyadic lattice (`tag = None`) or on shifted lattice `tag`.
    pub fn new(grid: Grid, tag: Option<usize>, cubes: Vec<SparseCube>, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidArgument(format!("sparseness {eta} outside (0, 1]")));
        }
        if let Some(q) = cubes.iter().find(|q| q.n != grid.dim() || q.side == 0) {
            return Err(Error::InvalidArgument(format!("cube {q} does not fit a {}-d grid", grid.dim())));
        }
        Ok(SparseFamily {
            grid,
            tag,
            cubes,
            witnesses: None,
            eta,
        })
    }

    pub fn with_witnesses(mut self, witnesses: Vec<CellMask>) -> Result<Self> {
        if witnesses.len() != self.cubes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} witnesses for {} cubes",
                witnesses.len(),
                self.cubes.len()
            )));
        }
        if witnesses.iter().any(|w| w.grid() != self.grid) {
            return Err(Error::InvalidArgument("witness on a different grid".into()));
        }
        self.witnesses = Some(witnesses);
        Ok(self)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn tag(&self) -> Option<usize> {
        self.tag
    }

    pub fn cubes(&self) -> &[SparseCube] {
        &self.cubes
    }

    pub fn witnesses(&self) -> Option<&[CellMask]> {
        self.witnesses.as_deref()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// `E_Q = Q ∖ ∪{maximal members strictly inside Q}`, clipped to the box.
    pub fn canonical_witnesses(&self) -> Vec<CellMask> {
        let k = self.cubes.len();
        (0..k)
            .map(|a| {
                let q = self.cubes[a];
                let mut e = CellMask::empty(self.grid);
                q.for_each_cell(&self.grid, |i| e.set(i, true));
                let inner: Vec<SparseCube> = self
                    .cubes
                    .iter()
                    .filter(|c| **c != q && q.contains(c))
                    .copied()
                    .collect();
                for c in &inner {
                    let maximal = !inner.iter().any(|d| d != c && d.contains(c));
                    if maximal {
                        c.for_each_cell(&self.grid, |i| e.set(i, false));
                    }
                }
                e
            })
            .collect()
    }
}

/// Outcome of a sparsity check.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityAudit {
    pub eta: f64,
    pub passed: bool,
    /// Witnesses were derived canonically rather than supplied.
    pub canonical: bool,
    /// `min_Q |E_Q|/|Q|` (1 for an empty family).
    pub min_ratio: f64,
    pub worst: Option<SparseCube>,
    /// Witness cells lying outside their cube.
    pub escaped_cells: usize,
    /// Cells claimed by more than one witness.
    pub shared_cells: usize,
}

/// Checks containment, disjointness and `|E_Q| ≥ η|Q|`.
pub fn verify_sparsity(family: &SparseFamily, eta: f64) -> SparsityAudit {
    let grid = family.grid();
    let canonical = family.witnesses.is_none();
    let derived;
    let witnesses: &[CellMask] = match &family.witnesses {
        Some(w) => w,
        None => {
            derived = family.canonical_witnesses();
            &derived
        }
    };
    let mut owners = vec![0u32; grid.len()];
    let mut escaped = 0;
    let mut min_ratio = 1.0f64;
    let mut worst = None;
    for (q, e) in family.cubes.iter().zip(witnesses) {
        let mut inside = 0usize;
        for i in e.indices() {
            owners[i] += 1;
            let c = grid.coords(i);
            if q.contains_coords(&[c[0] as i64, c[1] as i64]) {
                inside += 1;
            } else {
                escaped += 1;
            }
        }
        let ratio = inside as f64 / q.cell_count() as f64;
        if ratio < min_ratio {
            min_ratio = ratio;
            worst = Some(*q);
        }
    }
    let shared = owners.iter().filter(|&&c| c > 1).count();
    SparsityAudit {
        eta,
        passed: escaped == 0 && shared == 0 && min_ratio >= eta,
        canonical,
        min_ratio,
        worst,
        escaped_cells: escaped,
        shared_cells: shared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        // 8 cells of side 1/4 on [-1, 1)
        Grid::new(1, 0, 2).unwrap()
    }

    fn q(lo: i64, side: usize) -> SparseCube {
        SparseCube::new(1, [lo, 0], side)
    }

    #[test]
    fn disjoint_cubes_are_fully_sparse() {
        let s = SparseFamily::new(grid(), None, vec![q(0, 2), q(2, 2), q(4, 4)], 1.0).unwrap();
        let a = verify_sparsity(&s, 1.0);
        assert!(a.passed && a.canonical);
        assert_eq!(a.min_ratio, 1.0);
    }

    #[test]
    fn dyadic_chain_is_half_sparse() {
        let s = SparseFamily::new(grid(), None, vec![q(0, 8), q(0, 4), q(0, 2)], 0.5).unwrap();
        let a = verify_sparsity(&s, 0.5);
        assert!(a.passed);
        assert_eq!(a.min_ratio, 0.5);
        assert!(!verify_sparsity(&s, 0.51).passed);
    }

    #[test]
    fn three_quarter_children() {
        // children cover 3/4 of the parent, leaving a quarter as witness
        let s = SparseFamily::new(grid(), None, vec![q(0, 8), q(0, 4), q(4, 2)], 0.5).unwrap();
        assert!(!verify_sparsity(&s, 0.5).passed);
        let a = verify_sparsity(&s, 0.25);
        assert!(a.passed);
        assert_eq!(a.min_ratio, 0.25);
        assert_eq!(a.worst, Some(q(0, 8)));
    }

    #[test]
    fn supplied_overlapping_witnesses_fail() {
        let g = grid();
        let w = CellMask::from_box(g, &crate::grid::CellBox::new(1, [0, 0], 2));
        let s = SparseFamily::new(g, Some(0), vec![q(0, 2), q(0, 4)], 0.5)
            .unwrap()
            .with_witnesses(vec![w.clone(), w])
            .unwrap();
        let a = verify_sparsity(&s, 0.5);
        assert!(!a.passed && !a.canonical);
        assert_eq!(a.shared_cells, 2);
    }

    #[test]
    fn cubes_outside_the_box_count_in_full() {
        // a triple hanging off the left edge keeps only its in-box part
        let s = SparseFamily::new(grid(), None, vec![q(-2, 6)], 0.5).unwrap();
        let a = verify_sparsity(&s, 0.5);
        assert_eq!(a.min_ratio, 4.0 / 6.0);
    }
}
