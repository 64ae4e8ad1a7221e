use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

type Q = Ratio<i128>;

/// Invertible `n×n` matrix with exact rational entries (row-major).
#[derive(Clone, PartialEq)]
pub struct LinearMap {
    n: usize,
    entries: Vec<Q>,
    inverse: Vec<Q>,
    det: Q,
    norm: f64,
}

fn det_of(n: usize, e: &[Q]) -> Q {
    match n {
        1 => e[0],
        2 => e[0] * e[3] - e[1] * e[2],
        _ => unreachable!(),
    }
}

fn frobenius_bound(e: &[Q]) -> f64 {
    e.iter()
        .map(|v| v.to_f64().unwrap_or(f64::NAN).powi(2))
        .sum::<f64>()
        .sqrt()
}

impl LinearMap {
    pub fn from_rationals(n: usize, entries: Vec<Q>) -> Result<Self> {
        if n == 0 || n > 2 {
            return Err(Error::Dimension(n));
        }
        if entries.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        let det = det_of(n, &entries);
        if det.is_zero() {
            return Err(Error::Singular(format!("{:?}", entries)));
        }
        let inverse = match n {
            1 => vec![Q::one() / entries[0]],
            _ => vec![
                entries[3] / det,
                -entries[1] / det,
                -entries[2] / det,
                entries[0] / det,
            ],
        };
        let norm = frobenius_bound(&entries);
        Ok(LinearMap {
            n,
            entries,
            inverse,
            det,
            norm,
        })
    }

    /// Build from `(numerator, denominator)` pairs.
    pub fn from_pairs(n: usize, entries: &[(i64, i64)]) -> Result<Self> {
        let mut out = Vec::with_capacity(entries.len());
        for &(a, b) in entries {
            if b == 0 {
                return Err(Error::InvalidArgument("zero denominator".into()));
            }
            out.push(Q::new(a as i128, b as i128));
        }
        LinearMap::from_rationals(n, out)
    }

    pub fn identity(n: usize) -> Result<Self> {
        LinearMap::scalar(n, 1, 1)
    }

    pub fn scalar(n: usize, num: i64, den: i64) -> Result<Self> {
        let d: Vec<(i64, i64)> = vec![(num, den); n];
        LinearMap::diag(&d)
    }

    pub fn diag(d: &[(i64, i64)]) -> Result<Self> {
        let n = d.len();
        let mut e = vec![(0i64, 1i64); n * n];
        for (i, &v) in d.iter().enumerate() {
            e[i * n + i] = v;
        }
        LinearMap::from_pairs(n, &e)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> Q {
        self.entries[i * self.n + j]
    }

    pub fn entries_f64(&self) -> Vec<f64> {
        self.entries.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect()
    }

    pub fn det(&self) -> Q {
        self.det
    }

    pub fn det_f64(&self) -> f64 {
        self.det.to_f64().unwrap_or(f64::NAN)
    }

    /// Upper bound on the operator norm (Frobenius norm).
    pub fn norm_bound(&self) -> f64 {
        self.norm
    }

    pub fn inverse(&self) -> LinearMap {
        LinearMap::from_rationals(self.n, self.inverse.clone())
            .expect("inverse of an invertible map is invertible")
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        let e = self.entries_f64();
        (0..self.n)
            .map(|i| (0..self.n).map(|j| e[i * self.n + j] * x[j]).sum())
            .collect()
    }

    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let n = self.n;
        let mut e = vec![Q::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    e[i * n + j] += self.entries[i * n + k] * other.entries[k * n + j];
                }
            }
        }
        LinearMap::from_rationals(n, e)
    }

    /// `self - other` as a raw matrix; its determinant may vanish.
    pub fn difference_det(&self, other: &LinearMap) -> Q {
        let e: Vec<Q> = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        det_of(self.n, &e)
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| self.entry(i, j) == if i == j { Q::one() } else { Q::zero() })
        })
    }

    /// Per output axis `i`: `(source axis, signed factor)` when the map is a
    /// signed permutation times a diagonal, i.e. `(Ax)_i = factor · x_source`.
    pub fn axis_structure(&self) -> Option<Vec<(usize, Q)>> {
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let nz: Vec<usize> = (0..self.n).filter(|&j| !self.entry(i, j).is_zero()).collect();
            if nz.len() != 1 {
                return None;
            }
            out.push((nz[0], self.entry(i, nz[0])));
        }
        Some(out)
    }

    /// Signed permutation composed with a diagonal of powers of two: such maps
    /// send grid cells onto unions of cells (or into single cells).
    pub fn is_grid_compatible(&self) -> bool {
        match self.axis_structure() {
            Some(ax) => ax.iter().all(|(_, f)| {
                let a = f.abs();
                (a.numer().count_ones() == 1) && (a.denom().count_ones() == 1)
            }),
            None => false,
        }
    }

    /// True when every axis factor has modulus at most one (the map never
    /// spreads a cell over several cells).
    pub fn is_non_expanding_axis_map(&self) -> bool {
        match self.axis_structure() {
            Some(ax) => ax.iter().all(|(_, f)| f.abs() <= Q::one()),
            None => false,
        }
    }
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.entry(i, j).to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        write!(f, "[{}]", rows.join("; "))
    }
}

/// Outcome of checking that all maps and all pairwise differences are invertible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisCheck {
    pub holds: bool,
    /// 1-based indices of the first failure; `(i, i)` means `A_i` itself is singular.
    pub witness: Option<(usize, usize)>,
}

pub fn check_hypothesis_h(maps: &[LinearMap]) -> Result<HypothesisCheck> {
    if maps.is_empty() {
        return Err(Error::InvalidArgument("empty map list".into()));
    }
    for (i, a) in maps.iter().enumerate() {
        if a.det().is_zero() {
            return Ok(HypothesisCheck {
                holds: false,
                witness: Some((i + 1, i + 1)),
            });
        }
    }
    for i in 0..maps.len() {
        for j in (i + 1)..maps.len() {
            if maps[i].dim() != maps[j].dim() {
                return Err(Error::DimensionMismatch {
                    expected: maps[i].dim(),
                    got: maps[j].dim(),
                });
            }
            if maps[i].difference_det(&maps[j]).is_zero() {
                return Ok(HypothesisCheck {
                    holds: false,
                    witness: Some((i + 1, j + 1)),
                });
            }
        }
    }
    Ok(HypothesisCheck {
        holds: true,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_is_exact() {
        let a = LinearMap::from_pairs(2, &[(1, 1), (2, 3), (-1, 2), (5, 1)]).unwrap();
        assert!(a.compose(&a.inverse()).unwrap().is_identity());
        assert!(a.inverse().compose(&a).unwrap().is_identity());
    }

    #[test]
    fn singular_rejected() {
        assert!(LinearMap::from_pairs(2, &[(1, 1), (2, 1), (2, 1), (4, 1)]).is_err());
    }

    #[test]
    fn hypothesis_examples() {
        let i = LinearMap::identity(1).unwrap();
        let m = LinearMap::scalar(1, -1, 1).unwrap();
        assert!(check_hypothesis_h(&[i.clone(), m]).unwrap().holds);
        let r = check_hypothesis_h(&[i.clone(), i]).unwrap();
        assert_eq!(r.witness, Some((1, 2)));
        let a = LinearMap::diag(&[(1, 1), (2, 1)]).unwrap();
        let b = LinearMap::diag(&[(2, 1), (2, 1)]).unwrap();
        assert!(!check_hypothesis_h(&[a, b]).unwrap().holds);
    }

    #[test]
    fn grid_compatibility() {
        assert!(LinearMap::diag(&[(2, 1), (-1, 2)]).unwrap().is_grid_compatible());
        assert!(LinearMap::from_pairs(2, &[(0, 1), (-1, 1), (1, 1), (0, 1)])
            .unwrap()
            .is_grid_compatible());
        assert!(!LinearMap::diag(&[(3, 1)]).unwrap().is_grid_compatible());
        assert!(!LinearMap::from_pairs(2, &[(1, 1), (1, 1), (0, 1), (1, 1)])
            .unwrap()
            .is_grid_compatible());
    }
}
