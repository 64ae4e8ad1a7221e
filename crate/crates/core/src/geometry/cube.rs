use std::fmt;

use super::DyadicRational;
use crate::error::{Error, Result};

/// Half-open axis-aligned cube `[corner, corner + side)^n` with exact coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Cube {
    corner: Vec<DyadicRational>,
    side: DyadicRational,
}

impl Cube {
    pub fn new(corner: Vec<DyadicRational>, side: DyadicRational) -> Result<Self> {
        if corner.is_empty() || corner.len() > 2 {
            return Err(Error::Dimension(corner.len()));
        }
        if !side.is_positive() {
            return Err(Error::InvalidArgument(format!("cube side {side} must be positive")));
        }
        Ok(Cube { corner, side })
    }

    /// Convenience constructor from integer corner and side.
    pub fn from_ints(corner: &[i64], side: i64) -> Result<Self> {
        Cube::new(
            corner.iter().map(|&c| DyadicRational::from_int(c)).collect(),
            DyadicRational::from_int(side),
        )
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }

    pub fn corner(&self) -> &[DyadicRational] {
        &self.corner
    }

    pub fn side(&self) -> DyadicRational {
        self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.to_f64().powi(self.dim() as i32)
    }

    /// Concentric dilate `λQ` for a positive exact factor.
    pub fn dilate(&self, lambda: DyadicRational) -> Result<Cube> {
        if !lambda.is_positive() {
            return Err(Error::InvalidArgument("dilation factor must be positive".into()));
        }
        let new_side = self.side.checked_mul(&lambda)?;
        let shift = new_side.checked_sub(&self.side)?.half();
        let corner = self
            .corner
            .iter()
            .map(|c| c.checked_sub(&shift))
            .collect::<Result<Vec<_>>>()?;
        Cube::new(corner, new_side)
    }

    /// Concentric triple `3Q`.
    pub fn triple(&self) -> Cube {
        let corner = self.corner.iter().map(|&c| c - self.side).collect();
        Cube {
            corner,
            side: self.side.mul_int(3),
        }
    }

    pub fn contains_point(&self, x: &[DyadicRational]) -> bool {
        self.corner
            .iter()
            .zip(x)
            .all(|(&c, &xi)| c <= xi && xi < c + self.side)
    }

    /// `other ⊂ self`.
    pub fn contains(&self, other: &Cube) -> bool {
        self.corner.iter().zip(&other.corner).all(|(&a, &b)| {
            a <= b && b + other.side <= a + self.side
        })
    }

    pub fn intersects(&self, other: &Cube) -> bool {
        self.corner.iter().zip(&other.corner).all(|(&a, &b)| {
            a < b + other.side && b < a + self.side
        })
    }

    /// The `2^n` dyadic children.
    pub fn children(&self) -> Vec<Cube> {
        let h = self.side.half();
        let n = self.dim();
        (0..(1usize << n))
            .map(|mask| {
                let corner = (0..n)
                    .map(|i| if mask >> i & 1 == 1 { self.corner[i] + h } else { self.corner[i] })
                    .collect();
                Cube { corner, side: h }
            })
            .collect()
    }

    pub fn center_f64(&self) -> Vec<f64> {
        let h = self.side.to_f64() / 2.0;
        self.corner.iter().map(|c| c.to_f64() + h).collect()
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .corner
            .iter()
            .map(|&c| format!("[{},{})", c, c + self.side))
            .collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl fmt::Debug for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_and_dilate_agree() {
        let q = Cube::from_ints(&[0], 1).unwrap();
        let t = q.triple();
        assert_eq!(t, Cube::from_ints(&[-1], 3).unwrap());
        assert_eq!(q.dilate(DyadicRational::from_int(3)).unwrap(), t);
        let half = q.dilate(DyadicRational::pow2(-1)).unwrap();
        assert_eq!(half.corner()[0], DyadicRational::new(1, 4).unwrap());
    }

    #[test]
    fn containment_is_half_open() {
        let big = Cube::from_ints(&[0, 0], 4).unwrap();
        let inner = Cube::from_ints(&[2, 2], 2).unwrap();
        let edge = Cube::from_ints(&[4, 0], 1).unwrap();
        assert!(big.contains(&inner));
        assert!(!big.intersects(&edge));
        assert_eq!(big.children().len(), 4);
    }
}
