use std::collections::HashMap;

use super::{CellBox, Grid};
use crate::error::{Error, Result};

/// Which cubes a supremum runs over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyKind {
    /// Union of the `3^n` shifted lattices built on the grid box.
    LatticeUnion,
    /// One shifted lattice, by tag.
    Lattice(usize),
    /// Standard dyadic cubes of the grid box.
    Reference,
    /// Every grid-aligned interval (n = 1 only), enumerated lazily.
    AllIntervals,
    /// Every grid-aligned square (n = 2 only), enumerated lazily.
    AllSquares,
    Explicit(String),
}

/// A finite family of grid-aligned cubes.
#[derive(Debug, Clone)]
pub struct CubeFamily {
    grid: Grid,
    kind: FamilyKind,
    boxes: Vec<CellBox>,
    with_cells: bool,
}

fn log2_cells(grid: &Grid) -> u32 {
    grid.cells_per_axis().trailing_zeros()
}

fn digits(n: usize, tag: usize) -> [usize; 2] {
    let mut d = [0usize; 2];
    for (i, v) in d.iter_mut().enumerate().take(n) {
        *v = tag / 3usize.pow(i as u32) % 3;
    }
    d
}

/// Residue (in units of `u`) of the scale-`k` anchor of shifted lattice `tag`.
fn residues(n: usize, tag: usize, k: u32) -> [usize; 2] {
    let d = digits(n, tag);
    let mut r = [0usize; 2];
    for i in 0..n {
        r[i] = if k.is_multiple_of(2) { d[i] % 3 } else { (3 - d[i] % 3) % 3 };
    }
    r
}

/// Scale-`k` cubes of shifted lattice `tag` lying inside the grid box.
pub(crate) fn shifted_boxes(grid: &Grid, tag: usize, k: u32) -> Vec<CellBox> {
    let n = grid.dim();
    let m = grid.cells_per_axis();
    let u = m >> k;
    if u == 0 {
        return Vec::new();
    }
    let side = 3 * u;
    let r = residues(n, tag, k);
    let starts: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..).map(|t| r[i] * u + t * side).take_while(|&lo| lo + side <= m).collect())
        .collect();
    let mut out = Vec::new();
    if n == 1 {
        for &a in &starts[0] {
            out.push(CellBox::new(1, [a, 0], side));
        }
    } else {
        for &b in &starts[1] {
            for &a in &starts[0] {
                out.push(CellBox::new(2, [a, b], side));
            }
        }
    }
    out
}

pub(crate) fn reference_boxes(grid: &Grid, k: u32) -> Vec<CellBox> {
    let n = grid.dim();
    let m = grid.cells_per_axis();
    let u = m >> k;
    if u == 0 {
        return Vec::new();
    }
    let per = m / u;
    let mut out = Vec::new();
    if n == 1 {
        for a in 0..per {
            out.push(CellBox::new(1, [a * u, 0], u));
        }
    } else {
        for b in 0..per {
            for a in 0..per {
                out.push(CellBox::new(2, [a * u, b * u], u));
            }
        }
    }
    out
}

impl CubeFamily {
    pub fn lattice_union(grid: Grid) -> Self {
        let tags = 3usize.pow(grid.dim() as u32);
        let mut boxes = Vec::new();
        for tag in 0..tags {
            for k in 0..=log2_cells(&grid) {
                boxes.extend(shifted_boxes(&grid, tag, k));
            }
        }
        CubeFamily {
            grid,
            kind: FamilyKind::LatticeUnion,
            boxes,
            with_cells: false,
        }
    }

    pub fn lattice(grid: Grid, tag: usize) -> Result<Self> {
        if tag >= 3usize.pow(grid.dim() as u32) {
            return Err(Error::InvalidArgument(format!("lattice tag {tag} out of range")));
        }
        let boxes = (0..=log2_cells(&grid)).flat_map(|k| shifted_boxes(&grid, tag, k)).collect();
        Ok(CubeFamily {
            grid,
            kind: FamilyKind::Lattice(tag),
            boxes,
            with_cells: false,
        })
    }

    pub fn reference(grid: Grid) -> Self {
        let boxes = (0..=log2_cells(&grid)).flat_map(|k| reference_boxes(&grid, k)).collect();
        CubeFamily {
            grid,
            kind: FamilyKind::Reference,
            boxes,
            with_cells: false,
        }
    }

    pub fn all_intervals(grid: Grid) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::Dimension(grid.dim()));
        }
        Ok(CubeFamily {
            grid,
            kind: FamilyKind::AllIntervals,
            boxes: Vec::new(),
            with_cells: false,
        })
    }

    pub fn all_squares(grid: Grid) -> Result<Self> {
        if grid.dim() != 2 {
            return Err(Error::Dimension(grid.dim()));
        }
        Ok(CubeFamily {
            grid,
            kind: FamilyKind::AllSquares,
            boxes: Vec::new(),
            with_cells: false,
        })
    }

    /// Every grid-aligned cube, whatever the dimension.
    pub fn all_cubes(grid: Grid) -> Self {
        let kind = if grid.dim() == 1 {
            FamilyKind::AllIntervals
        } else {
            FamilyKind::AllSquares
        };
        CubeFamily {
            grid,
            kind,
            boxes: Vec::new(),
            with_cells: false,
        }
    }

    fn is_lazy(&self) -> bool {
        matches!(self.kind, FamilyKind::AllIntervals | FamilyKind::AllSquares)
    }

    pub fn explicit(grid: Grid, label: &str, boxes: Vec<CellBox>) -> Result<Self> {
        let full = grid.full_box();
        if let Some(b) = boxes.iter().find(|b| b.n != grid.dim() || !full.contains(b)) {
            return Err(Error::OutOfRange(format!("{b:?} is not inside the grid box")));
        }
        Ok(CubeFamily {
            grid,
            kind: FamilyKind::Explicit(label.to_string()),
            boxes,
            with_cells: false,
        })
    }

    /// Adds every single cell to the family.
    pub fn with_cells(mut self) -> Self {
        self.with_cells = true;
        self
    }

    /// Keeps the cubes satisfying a predicate (cells, if included, are tested too).
    pub fn filtered(&self, keep: impl Fn(&CellBox) -> bool) -> CubeFamily {
        let mut boxes: Vec<CellBox> = Vec::new();
        self.for_each(|b| {
            if keep(&b) {
                boxes.push(b);
            }
        });
        CubeFamily {
            grid: self.grid,
            kind: FamilyKind::Explicit(format!("{} (filtered)", self.label())),
            boxes,
            with_cells: false,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn includes_cells(&self) -> bool {
        self.with_cells
    }

    pub fn label(&self) -> String {
        let base = match &self.kind {
            FamilyKind::LatticeUnion => "lattice-union".to_string(),
            FamilyKind::Lattice(t) => format!("lattice-{t}"),
            FamilyKind::Reference => "reference".to_string(),
            FamilyKind::AllIntervals => "all-intervals".to_string(),
            FamilyKind::AllSquares => "all-squares".to_string(),
            FamilyKind::Explicit(s) => s.clone(),
        };
        if self.with_cells {
            format!("{base}+cells")
        } else {
            base
        }
    }

    /// Materialized cubes (empty for the lazy all-cube families).
    pub fn boxes(&self) -> &[CellBox] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        let m = self.grid.cells_per_axis();
        let base = match self.kind {
            FamilyKind::AllIntervals => m * (m + 1) / 2,
            FamilyKind::AllSquares => (1..=m).map(|s| (m - s + 1) * (m - s + 1)).sum(),
            _ => self.boxes.len(),
        };
        base + if self.with_cells && !self.is_lazy() {
            self.grid.len()
        } else {
            0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits every cube once (cells last, when added).
    pub fn for_each(&self, mut f: impl FnMut(CellBox)) {
        let m = self.grid.cells_per_axis();
        if self.kind == FamilyKind::AllIntervals {
            for a in 0..m {
                for len in 1..=(m - a) {
                    f(CellBox::new(1, [a, 0], len));
                }
            }
            return;
        }
        if self.kind == FamilyKind::AllSquares {
            for side in 1..=m {
                for y in 0..=(m - side) {
                    for x in 0..=(m - side) {
                        f(CellBox::new(2, [x, y], side));
                    }
                }
            }
            return;
        }
        for b in &self.boxes {
            f(*b);
        }
        if self.with_cells {
            for i in 0..self.grid.len() {
                f(CellBox::new(self.grid.dim(), self.grid.coords(i), 1));
            }
        }
    }

    pub fn contains(&self, b: &CellBox) -> bool {
        match self.kind {
            FamilyKind::AllIntervals | FamilyKind::AllSquares => {
                b.n == self.grid.dim() && self.grid.full_box().contains(b)
            }
            _ => (self.with_cells && b.side == 1) || self.boxes.contains(b),
        }
    }
}

/// One lattice restricted to the grid box, with parent links.
#[derive(Debug, Clone)]
pub struct LatticeTree {
    grid: Grid,
    tag: Option<usize>,
    nodes: Vec<CellBox>,
    scale: Vec<u32>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    index: HashMap<CellBox, usize>,
}

impl LatticeTree {
    /// `tag = None` gives the standard dyadic cubes, otherwise a shifted lattice.
    pub fn new(grid: Grid, tag: Option<usize>) -> Result<Self> {
        if let Some(t) = tag {
            if t >= 3usize.pow(grid.dim() as u32) {
                return Err(Error::InvalidArgument(format!("lattice tag {t} out of range")));
            }
        }
        let mut nodes = Vec::new();
        let mut scale = Vec::new();
        for k in 0..=log2_cells(&grid) {
            let level = match tag {
                Some(t) => shifted_boxes(&grid, t, k),
                None => reference_boxes(&grid, k),
            };
            scale.extend(std::iter::repeat_n(k, level.len()));
            nodes.extend(level);
        }
        let index: HashMap<CellBox, usize> = nodes.iter().enumerate().map(|(i, b)| (*b, i)).collect();
        let mut tree = LatticeTree {
            grid,
            tag,
            parent: vec![None; nodes.len()],
            children: vec![Vec::new(); nodes.len()],
            nodes,
            scale,
            index,
        };
        for i in 0..tree.nodes.len() {
            if tree.scale[i] == 0 {
                continue;
            }
            let lo = tree.nodes[i].lo;
            if let Some(p) = tree.containing(tree.scale[i] - 1, &lo) {
                tree.parent[i] = Some(p);
                tree.children[p].push(i);
            }
        }
        Ok(tree)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn tag(&self) -> Option<usize> {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> CellBox {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[CellBox] {
        &self.nodes
    }

    pub fn scale(&self, i: usize) -> u32 {
        self.scale[i]
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn find(&self, b: &CellBox) -> Option<usize> {
        self.index.get(b).copied()
    }

    /// Node at scale `k` containing the cell with coordinates `c`, if inside the box.
    pub fn containing(&self, k: u32, c: &[usize]) -> Option<usize> {
        let n = self.grid.dim();
        let m = self.grid.cells_per_axis();
        let u = m >> k;
        if u == 0 {
            return None;
        }
        let (side, r) = match self.tag {
            Some(t) => {
                let r = residues(n, t, k);
                (3 * u, [r[0] * u, r[1] * u])
            }
            None => (u, [0, 0]),
        };
        let mut lo = [0usize; 2];
        for i in 0..n {
            if c[i] < r[i] {
                return None;
            }
            lo[i] = r[i] + (c[i] - r[i]) / side * side;
        }
        self.find(&CellBox::new(n, lo, side))
    }

    /// Node indices from `i` up through its ancestors.
    pub fn ancestors(&self, i: usize) -> Vec<usize> {
        let mut v = vec![i];
        let mut cur = i;
        while let Some(p) = self.parent[cur] {
            v.push(p);
            cur = p;
        }
        v
    }

    /// All nodes contained in node `i`, including itself.
    pub fn descendants(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut k = 0;
        while k < out.len() {
            out.extend_from_slice(&self.children[out[k]]);
            k += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_shifted_lattices;

    #[test]
    fn integer_lattices_match_exact_ones() {
        for n in [1usize, 2] {
            let g = Grid::new(n, 1, 1).unwrap();
            let depth = log2_cells(&g) as i32;
            let exact = make_shifted_lattices(n, depth, &g.box_cube()).unwrap();
            let fam = CubeFamily::lattice_union(g);
            for b in fam.boxes() {
                let q = g.cube_of(b);
                assert!(exact.iter().any(|d| d.contains_cube(&q)), "{q}");
            }
            for d in &exact {
                let tree = LatticeTree::new(g, Some(d.tag())).unwrap();
                for q in d.all_cubes() {
                    if g.box_cube().contains(&q) {
                        let b = g.cell_box(&q).unwrap();
                        assert!(tree.find(&b).is_some(), "{q} missing from tag {}", d.tag());
                    }
                }
            }
        }
    }

    #[test]
    fn trees_are_nested() {
        let g = Grid::new(1, 2, 2).unwrap();
        for tag in [None, Some(0), Some(1), Some(2)] {
            let t = LatticeTree::new(g, tag).unwrap();
            for i in 0..t.len() {
                if let Some(p) = t.parent(i) {
                    assert!(t.node(p).contains(&t.node(i)));
                    assert_eq!(t.node(p).side, 2 * t.node(i).side);
                }
            }
        }
        let r = LatticeTree::new(g, None).unwrap();
        assert_eq!(r.len(), 2 * 32 - 1);
        assert!((0..r.len()).filter(|&i| r.parent(i).is_none()).count() == 1);
    }

    #[test]
    fn interval_family_counts() {
        let g = Grid::new(1, 0, 1).unwrap();
        let f = CubeFamily::all_intervals(g).unwrap();
        let mut c = 0;
        f.for_each(|_| c += 1);
        assert_eq!(c, f.len());
        assert_eq!(c, 10);
    }
}
