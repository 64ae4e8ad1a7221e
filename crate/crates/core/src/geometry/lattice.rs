//! Truncated dyadic lattices and the `3^n` shifted families.
//!
//! The reference lattice at scale `k` consists of cubes of side `b·2^{-k}`
//! anchored at the base corner. Shifted lattice `t ∈ {0,1,2}^n` has cubes of
//! side `3b·2^{-k}` whose per-axis offset at scale `k` is
//! `b·2^{-k}·((-1)^k t_i mod 3)`. Successive scales nest because
//! `2·((-1)^k t) ≡ (-1)^{k+1} t (mod 3)`, and at a fixed scale the offsets run
//! over all residues mod 3 as `t` varies, so every triple `3Q` of a reference
//! cube is a member of exactly one shifted lattice.

use super::{Cube, DyadicRational};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatticeKind {
    Reference,
    Shifted { digits: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicLattice {
    n: usize,
    tag: usize,
    kind: LatticeKind,
    base: Cube,
    depth: i32,
}

const MAX_DEPTH: i32 = 48;

fn validate_base(n: usize, depth: i32, base: &Cube) -> Result<()> {
    if n == 0 || n > 2 {
        return Err(Error::Dimension(n));
    }
    if base.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: base.dim(),
        });
    }
    if depth < 1 {
        return Err(Error::InvalidArgument(format!("depth {depth} must be at least 1")));
    }
    let e = base.side().log2_exact().ok_or_else(|| {
        Error::InvalidArgument(format!("base side {} is not a power of two", base.side()))
    })?;
    if depth > MAX_DEPTH || e.abs() + depth > 100 {
        return Err(Error::Overflow(format!(
            "depth {depth} with base side 2^{e} exceeds exact range"
        )));
    }
    Ok(())
}

impl DyadicLattice {
    pub fn reference(n: usize, depth: i32, base: &Cube) -> Result<Self> {
        validate_base(n, depth, base)?;
        Ok(DyadicLattice {
            n,
            tag: 0,
            kind: LatticeKind::Reference,
            base: base.clone(),
            depth,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Descriptor `j = Σ t_i 3^i` (0 for the reference lattice).
    pub fn tag(&self) -> usize {
        self.tag
    }

    pub fn kind(&self) -> &LatticeKind {
        &self.kind
    }

    pub fn base(&self) -> &Cube {
        &self.base
    }

    pub fn depth(&self) -> i32 {
        self.depth
    }

    pub fn scales(&self) -> std::ops::RangeInclusive<i32> {
        0..=self.depth
    }

    pub fn side(&self, k: i32) -> DyadicRational {
        let s = self.base.side().mul_pow2(-k);
        match self.kind {
            LatticeKind::Reference => s,
            LatticeKind::Shifted { .. } => s.mul_int(3),
        }
    }

    /// Absolute anchor of the scale-`k` tiling along `axis`.
    pub fn anchor(&self, k: i32, axis: usize) -> DyadicRational {
        let c = self.base.corner()[axis];
        match &self.kind {
            LatticeKind::Reference => c,
            LatticeKind::Shifted { digits } => {
                let sign = if k % 2 == 0 { 1i64 } else { -1 };
                let residue = (sign * digits[axis] as i64).rem_euclid(3);
                c + self.base.side().mul_pow2(-k).mul_int(residue)
            }
        }
    }

    /// Scale index of a side length, if it is one of this lattice's sides.
    pub fn scale_of(&self, side: DyadicRational) -> Option<i32> {
        self.scales().find(|&k| self.side(k) == side)
    }

    pub fn contains_cube(&self, q: &Cube) -> bool {
        if q.dim() != self.n {
            return false;
        }
        let Some(k) = self.scale_of(q.side()) else {
            return false;
        };
        let s = self.side(k);
        (0..self.n).all(|i| (q.corner()[i] - self.anchor(k, i)).is_multiple_of(&s))
    }

    /// The scale-`k` cube containing `x`.
    pub fn cube_containing(&self, k: i32, x: &[DyadicRational]) -> Result<Cube> {
        if !self.scales().contains(&k) {
            return Err(Error::OutOfRange(format!("scale {k} outside 0..={}", self.depth)));
        }
        let s = self.side(k);
        let corner = (0..self.n)
            .map(|i| {
                let a = self.anchor(k, i);
                let m = (x[i] - a).floor_div(&s);
                a + s.mul_int(m as i64)
            })
            .collect();
        Cube::new(corner, s)
    }

    /// Window in which the truncated lattice is enumerated: the base box for
    /// the reference lattice, its concentric triple for shifted ones.
    pub fn window(&self) -> Cube {
        match self.kind {
            LatticeKind::Reference => self.base.clone(),
            LatticeKind::Shifted { .. } => self.base.triple(),
        }
    }

    /// Scale-`k` cubes meeting the window.
    pub fn cubes_at(&self, k: i32) -> Vec<Cube> {
        let w = self.window();
        let s = self.side(k);
        let ranges: Vec<(i128, i128)> = (0..self.n)
            .map(|i| {
                let a = self.anchor(k, i);
                let lo = (w.corner()[i] - a).floor_div(&s);
                let hi = (w.corner()[i] + w.side() - a).floor_div(&s);
                (lo, hi)
            })
            .collect();
        let mut out = Vec::new();
        let mut idx: Vec<i128> = ranges.iter().map(|r| r.0).collect();
        loop {
            let corner: Vec<DyadicRational> = (0..self.n)
                .map(|i| self.anchor(k, i) + s.mul_int(idx[i] as i64))
                .collect();
            let c = Cube::new(corner, s).expect("positive side");
            if c.intersects(&w) {
                out.push(c);
            }
            let mut axis = 0;
            loop {
                if axis == self.n {
                    return out;
                }
                idx[axis] += 1;
                if idx[axis] <= ranges[axis].1 {
                    break;
                }
                idx[axis] = ranges[axis].0;
                axis += 1;
            }
        }
    }

    pub fn all_cubes(&self) -> Vec<Cube> {
        self.scales().flat_map(|k| self.cubes_at(k)).collect()
    }
}

/// The `3^n` shifted lattices built over a power-of-two base box.
pub fn make_shifted_lattices(n: usize, depth: i32, base: &Cube) -> Result<Vec<DyadicLattice>> {
    validate_base(n, depth, base)?;
    let count = 3usize.pow(n as u32);
    Ok((0..count)
        .map(|tag| {
            let digits: Vec<u8> = (0..n).map(|i| (tag / 3usize.pow(i as u32) % 3) as u8).collect();
            DyadicLattice {
                n,
                tag,
                kind: LatticeKind::Shifted { digits },
                base: base.clone(),
                depth,
            }
        })
        .collect())
}

/// `R_Q ∈ D_j` with `Q ⊂ R_Q` and side `3·l(Q)`, for a reference cube `Q`.
pub fn containing_triple(q: &Cube, lattice: &DyadicLattice) -> Result<Cube> {
    let reference = DyadicLattice::reference(lattice.dim(), lattice.depth(), lattice.base())?;
    if !lattice.base().contains(q) {
        return Err(Error::OutOfRange(format!(
            "{q} is not inside the truncated box {}",
            lattice.base()
        )));
    }
    if !reference.contains_cube(q) {
        return Err(Error::OutOfRange(format!(
            "{q} is not a reference cube within depth {}",
            lattice.depth()
        )));
    }
    let k = reference.scale_of(q.side()).expect("checked above");
    let r = lattice.cube_containing(k, q.corner())?;
    if !r.contains(q) || r.side() != q.side().mul_int(3) {
        return Err(Error::Construction(format!(
            "lattice {} has no triple-size cube containing {q}",
            lattice.tag()
        )));
    }
    Ok(r)
}

/// Result of the exhaustive check of the shifted-lattice properties.
#[derive(Debug, Clone, Default)]
pub struct LatticeAudit {
    pub reference_cubes: usize,
    pub lattice_cubes: usize,
    pub failures: Vec<String>,
}

impl LatticeAudit {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks, for every reference cube within depth, that `3Q` is a member of
/// some shifted lattice and that every shifted lattice has a triple-size cube
/// containing `Q`; also checks that each shifted lattice is nested.
pub fn audit_shifted_lattices(n: usize, depth: i32, base: &Cube) -> Result<LatticeAudit> {
    let lattices = make_shifted_lattices(n, depth, base)?;
    let reference = DyadicLattice::reference(n, depth, base)?;
    let mut audit = LatticeAudit::default();
    for q in reference.all_cubes() {
        audit.reference_cubes += 1;
        let t = q.triple();
        let owners = lattices.iter().filter(|d| d.contains_cube(&t)).count();
        if owners == 0 {
            audit.failures.push(format!("3Q for {q} is in no lattice"));
        }
        for d in &lattices {
            match containing_triple(&q, d) {
                Ok(r) if r.contains(&q) && r.side() == q.side().mul_int(3) => {}
                Ok(r) => audit.failures.push(format!("bad container {r} for {q}")),
                Err(e) => audit.failures.push(format!("lattice {}: {e}", d.tag())),
            }
        }
    }
    for d in &lattices {
        let cubes = d.all_cubes();
        audit.lattice_cubes += cubes.len();
        for (a_idx, a) in cubes.iter().enumerate() {
            for b in &cubes[a_idx + 1..] {
                if a.intersects(b) && !a.contains(b) && !b.contains(a) {
                    audit
                        .failures
                        .push(format!("lattice {}: {a} and {b} overlap without nesting", d.tag()));
                }
            }
        }
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_base(n: usize, side: i64) -> Cube {
        Cube::from_ints(&vec![0; n], side).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(make_shifted_lattices(1, 3, &unit_base(1, 8)).unwrap().len(), 3);
        assert_eq!(make_shifted_lattices(2, 1, &unit_base(2, 8)).unwrap().len(), 9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_shifted_lattices(3, 2, &unit_base(1, 8)).is_err());
        assert!(make_shifted_lattices(1, 0, &unit_base(1, 8)).is_err());
        assert!(make_shifted_lattices(1, 2, &unit_base(1, 6)).is_err());
        assert!(matches!(
            make_shifted_lattices(1, 500, &unit_base(1, 8)),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn exhaustive_one_dimensional() {
        let audit = audit_shifted_lattices(1, 3, &unit_base(1, 8)).unwrap();
        assert!(audit.passed(), "{:?}", audit.failures);
        assert_eq!(audit.reference_cubes, 1 + 2 + 4 + 8);
    }

    #[test]
    fn unit_triple_has_exactly_one_owner() {
        let base = unit_base(1, 8);
        let lattices = make_shifted_lattices(1, 3, &base).unwrap();
        let q = Cube::from_ints(&[0], 1).unwrap();
        let t = q.triple();
        assert_eq!(t, Cube::from_ints(&[-1], 3).unwrap());
        let owners: Vec<usize> = lattices
            .iter()
            .filter(|d| d.contains_cube(&t))
            .map(|d| d.tag())
            .collect();
        assert_eq!(owners.len(), 1);
    }

    #[test]
    fn containing_triple_examples() {
        let base = unit_base(1, 8);
        let lattices = make_shifted_lattices(1, 3, &base).unwrap();
        let q = Cube::from_ints(&[0], 1).unwrap();
        // scan D_0 at side 3 for members containing [0,1)
        let scan: Vec<Cube> = lattices[0]
            .all_cubes()
            .into_iter()
            .filter(|c| c.side() == DyadicRational::from_int(3) && c.contains(&q))
            .collect();
        assert_eq!(scan.len(), 1);
        assert_eq!(containing_triple(&q, &lattices[0]).unwrap(), scan[0]);
        let q2 = Cube::from_ints(&[2], 2).unwrap();
        for d in &lattices {
            assert_eq!(containing_triple(&q2, d).unwrap().side(), DyadicRational::from_int(6));
        }
        let outside = Cube::from_ints(&[8], 1).unwrap();
        assert!(matches!(
            containing_triple(&outside, &lattices[1]),
            Err(Error::OutOfRange(_))
        ));
    }
}
