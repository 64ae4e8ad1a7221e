use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{check_hypothesis_h, LinearMap};

/// Radial profile `k(x) = φ(|x|)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialProfile {
    /// `coeff · ρ^{-exponent}`.
    Power { coeff: f64, exponent: f64 },
    /// Piecewise-linear samples `(ρ, φ(ρ))`, constant beyond both ends.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl RadialProfile {
    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            RadialProfile::Power { coeff, exponent } => {
                if *coeff == 0.0 {
                    0.0
                } else if *exponent == 0.0 {
                    *coeff
                } else {
                    coeff * rho.powf(-exponent)
                }
            }
            RadialProfile::Tabulated { radii, values } => {
                let k = radii.partition_point(|&r| r <= rho);
                if k == 0 {
                    values[0]
                } else if k == radii.len() {
                    values[k - 1]
                } else {
                    let (r0, r1) = (radii[k - 1], radii[k]);
                    let t = (rho - r0) / (r1 - r0);
                    values[k - 1] + t * (values[k] - values[k - 1])
                }
            }
        }
    }
}

/// One factor `k_i` of the product kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub profile: RadialProfile,
    /// Homogeneity exponent `α_i`; stored exactly for power profiles.
    pub exponent: f64,
    /// Integrability index `r_i ∈ (1, ∞]`.
    pub r: f64,
}

impl KernelSpec {
    pub fn power(exponent: f64) -> Result<Self> {
        Self::power_with(1.0, exponent, f64::INFINITY)
    }

    pub fn power_with(coeff: f64, exponent: f64, r: f64) -> Result<Self> {
        if !(exponent >= 0.0) || !coeff.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "power kernel needs a finite coefficient and exponent >= 0, got {coeff}, {exponent}"
            )));
        }
        Self::checked(RadialProfile::Power { coeff, exponent }, exponent, r)
    }

    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>, exponent: f64, r: f64) -> Result<Self> {
        if radii.is_empty() || radii.len() != values.len() {
            return Err(Error::InvalidArgument("tabulated profile needs matching nonempty columns".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] < 0.0 {
            return Err(Error::InvalidArgument("radius column must be strictly increasing and nonnegative".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("profile values must be finite and nonnegative".into()));
        }
        Self::checked(RadialProfile::Tabulated { radii, values }, exponent, r)
    }

    fn checked(profile: RadialProfile, exponent: f64, r: f64) -> Result<Self> {
        if !(r > 1.0) {
            return Err(Error::InvalidArgument(format!("integrability index {r} must exceed 1")));
        }
        Ok(KernelSpec { profile, exponent, r })
    }

    /// Loads `radius,value` rows (header optional).
    pub fn load_csv(path: impl AsRef<Path>, exponent: f64, r: f64) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::Parse(format!("row {i}: expected radius,value")));
            }
            let (a, b) = (rec[0].trim().parse::<f64>(), rec[1].trim().parse::<f64>());
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    radii.push(a);
                    values.push(b);
                }
                _ if i == 0 => continue,
                _ => return Err(Error::Parse(format!("row {i}: non-numeric entry"))),
            }
        }
        Self::tabulated(radii, values, exponent, r)
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.profile.eval(rho)
    }

    /// Average of the profile over a centred ball of measure `h^n`.
    pub fn cell_average(&self, h: f64, n: usize) -> f64 {
        match (&self.profile, n) {
            (RadialProfile::Power { coeff, exponent }, 1) => {
                coeff * (h / 2.0).powf(-exponent) / (1.0 - exponent)
            }
            (RadialProfile::Power { coeff, exponent }, _) => {
                let rad = h / std::f64::consts::PI.sqrt();
                coeff * 2.0 * rad.powf(-exponent) / (2.0 - exponent)
            }
            (RadialProfile::Tabulated { .. }, _) => {
                let rad = if n == 1 { h / 2.0 } else { h / std::f64::consts::PI.sqrt() };
                let steps = 256;
                let d = rad / steps as f64;
                let mut s = 0.0;
                for k in 0..steps {
                    let rho = (k as f64 + 0.5) * d;
                    s += if n == 1 { self.eval(rho) } else { self.eval(rho) * 2.0 * rho / (rad * rad) };
                }
                if n == 1 {
                    s / steps as f64
                } else {
                    s * d
                }
            }
        }
    }
}

/// `(α, k_i, A_i, s)` describing the product-kernel operator.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub n: usize,
    pub alpha: f64,
    pub kernels: Vec<KernelSpec>,
    pub maps: Vec<LinearMap>,
    pub s: f64,
}

const SUM_TOL: f64 = 1e-9;

impl OperatorSpec {
    pub fn new(n: usize, alpha: f64, kernels: Vec<KernelSpec>, maps: Vec<LinearMap>, s: f64) -> Result<Self> {
        let spec = OperatorSpec {
            n,
            alpha,
            kernels,
            maps,
            s,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Power kernels `|x|^{-α_i}` with `r_i = ∞` and `s = 1`.
    pub fn power_product(n: usize, alpha: f64, exponents: &[f64], maps: Vec<LinearMap>) -> Result<Self> {
        let kernels = exponents.iter().map(|&a| KernelSpec::power(a)).collect::<Result<Vec<_>>>()?;
        Self::new(n, alpha, kernels, maps, 1.0)
    }

    pub fn m(&self) -> usize {
        self.kernels.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > 2 {
            return Err(Error::Dimension(self.n));
        }
        let n = self.n as f64;
        if !(self.alpha >= 0.0 && self.alpha < n) {
            return Err(Error::InvalidArgument(format!("alpha {} outside [0, n)", self.alpha)));
        }
        if self.kernels.is_empty() || self.kernels.len() != self.maps.len() {
            return Err(Error::InvalidArgument(format!(
                "{} kernels for {} maps",
                self.kernels.len(),
                self.maps.len()
            )));
        }
        if let Some(m) = self.maps.iter().find(|m| m.dim() != self.n) {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: m.dim(),
            });
        }
        for k in &self.kernels {
            if !(k.exponent >= 0.0 && k.exponent < n) {
                return Err(Error::InvalidArgument(format!(
                    "kernel exponent {} must lie in [0, n)",
                    k.exponent
                )));
            }
        }
        let sum: f64 = self.kernels.iter().map(|k| k.exponent).sum();
        if (sum - (n - self.alpha)).abs() > SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "kernel exponents sum to {sum}, expected n - alpha = {}",
                n - self.alpha
            )));
        }
        if !(self.s >= 1.0) {
            return Err(Error::InvalidArgument(format!("s = {} must be at least 1", self.s)));
        }
        let holder: f64 = self.kernels.iter().map(|k| 1.0 / k.r).sum::<f64>() + 1.0 / self.s;
        if (holder - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "sum of 1/r_i plus 1/s is {holder}, expected 1"
            )));
        }
        let h = check_hypothesis_h(&self.maps)?;
        if !h.holds {
            let (i, j) = h.witness.unwrap_or((0, 0));
            return Err(Error::Singular(format!(
                "maps violate invertibility of A_i and A_i - A_j (witness {i},{j})"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_cell_average_matches_quadrature() {
        let k = KernelSpec::power(0.4).unwrap();
        let h = 0.25;
        let steps = 200_000;
        let mut s = 0.0;
        for i in 0..steps {
            let t = (i as f64 + 0.5) / steps as f64 * h / 2.0;
            s += k.eval(t);
        }
        assert_relative_eq!(k.cell_average(h, 1), s / steps as f64, max_relative = 1e-3);
        let tab = KernelSpec::tabulated(vec![0.0, 1.0], vec![2.0, 2.0], 0.0, f64::INFINITY).unwrap();
        assert_relative_eq!(tab.cell_average(0.5, 2), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn spec_validation() {
        let maps = vec![LinearMap::scalar(1, -1, 1).unwrap(), LinearMap::identity(1).unwrap()];
        assert!(OperatorSpec::power_product(1, 0.25, &[0.375, 0.375], maps.clone()).is_ok());
        assert!(OperatorSpec::power_product(1, 0.25, &[0.5, 0.375], maps.clone()).is_err());
        let same = vec![LinearMap::identity(1).unwrap(), LinearMap::identity(1).unwrap()];
        assert!(matches!(
            OperatorSpec::power_product(1, 0.0, &[0.5, 0.5], same),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn tabulated_interpolates() {
        let k = KernelSpec::tabulated(vec![1.0, 2.0, 4.0], vec![4.0, 2.0, 1.0], 1.0, 2.0).unwrap();
        assert_eq!(k.eval(0.1), 4.0);
        assert_eq!(k.eval(1.5), 3.0);
        assert_eq!(k.eval(9.0), 1.0);
    }
}
