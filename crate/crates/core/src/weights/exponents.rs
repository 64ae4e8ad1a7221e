use crate::error::{Error, Result};

const TOL: f64 = 1e-9;

/// Per-factor kernel data: decay exponents `α_i` and integrability indices `r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelExponents {
    pub alphas: Vec<f64>,
    pub rs: Vec<f64>,
}

/// Exponents of a weighted inequality `L^p -> L^q` with fractional order `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSet {
    n: usize,
    alpha: f64,
    p: f64,
    q: f64,
    s: f64,
    sobolev: bool,
    kernels: Option<KernelExponents>,
}

/// `p' = p/(p-1)`, infinite at `p = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

impl ExponentSet {
    pub fn new(n: usize, alpha: f64, p: f64, q: f64) -> Result<Self> {
        if n == 0 || n > 2 {
            return Err(Error::Dimension(n));
        }
        if !(alpha >= 0.0 && alpha < n as f64) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, {n})")));
        }
        if !(p >= 1.0 && p <= q && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("need 1 <= p <= q < inf, got p={p}, q={q}")));
        }
        Ok(ExponentSet {
            n,
            alpha,
            p,
            q,
            s: 1.0,
            sobolev: false,
            kernels: None,
        })
    }

    /// `q` from `1/q = 1/p - α/n`.
    pub fn sobolev(n: usize, alpha: f64, p: f64) -> Result<Self> {
        let inv = 1.0 / p - alpha / n as f64;
        if !(inv > 0.0) {
            return Err(Error::InvalidArgument(format!("p = {p} must be below n/alpha")));
        }
        let mut e = Self::new(n, alpha, p, 1.0 / inv)?;
        e.sobolev = true;
        Ok(e)
    }

    pub fn with_s(mut self, s: f64) -> Result<Self> {
        if !(s >= 1.0) || s.is_infinite() {
            return Err(Error::InvalidArgument(format!("s = {s} must be in [1, inf)")));
        }
        self.s = s;
        self.check_kernels()?;
        Ok(self)
    }

    pub fn with_kernels(mut self, alphas: Vec<f64>, rs: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() || alphas.len() != rs.len() {
            return Err(Error::InvalidArgument("need one r per kernel exponent".into()));
        }
        self.kernels = Some(KernelExponents { alphas, rs });
        self.check_kernels()?;
        Ok(self)
    }

    fn check_kernels(&self) -> Result<()> {
        let Some(k) = &self.kernels else { return Ok(()) };
        let n = self.n as f64;
        if let Some(a) = k.alphas.iter().find(|a| !(**a >= 0.0 && **a < n)) {
            return Err(Error::InvalidArgument(format!("kernel exponent {a} outside [0, n)")));
        }
        if let Some(r) = k.rs.iter().find(|r| !(**r > 1.0)) {
            return Err(Error::InvalidArgument(format!("kernel index r = {r} must exceed 1")));
        }
        let total: f64 = k.alphas.iter().sum();
        if (total - (n - self.alpha)).abs() > TOL {
            return Err(Error::InvalidArgument(format!(
                "kernel exponents sum to {total}, expected n - alpha = {}",
                n - self.alpha
            )));
        }
        let holder: f64 = k.rs.iter().map(|r| 1.0 / r).sum::<f64>() + 1.0 / self.s;
        if (holder - 1.0).abs() > TOL {
            return Err(Error::InvalidArgument(format!("sum of 1/r_i plus 1/s is {holder}, expected 1")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p_conj(&self) -> f64 {
        conjugate(self.p)
    }

    pub fn q_conj(&self) -> f64 {
        conjugate(self.q)
    }

    pub fn is_sobolev(&self) -> bool {
        self.sobolev
    }

    pub fn kernels(&self) -> Option<&KernelExponents> {
        self.kernels.as_ref()
    }

    /// `1/q - 1/p + α/n`, zero under the Sobolev link.
    pub fn scaling_gap(&self) -> f64 {
        1.0 / self.q - 1.0 / self.p + self.alpha / self.n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobolev_link() {
        let e = ExponentSet::sobolev(1, 0.25, 2.0).unwrap();
        assert!((e.q() - 4.0).abs() < 1e-12);
        assert!(e.scaling_gap().abs() < 1e-12);
        assert!(ExponentSet::sobolev(1, 0.5, 2.0).is_err());
    }

    #[test]
    fn conjugates() {
        let e = ExponentSet::new(2, 0.0, 1.0, 3.0).unwrap();
        assert!(e.p_conj().is_infinite());
        assert!((e.q_conj() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(ExponentSet::new(1, 0.0, 3.0, 2.0).is_err());
        assert!(ExponentSet::new(1, 1.0, 2.0, 2.0).is_err());
        assert!(ExponentSet::new(3, 0.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn kernel_bookkeeping() {
        let e = ExponentSet::sobolev(1, 0.25, 2.0).unwrap();
        assert!(e.clone().with_kernels(vec![0.25, 0.5], vec![f64::INFINITY, f64::INFINITY]).is_ok());
        assert!(e.clone().with_kernels(vec![0.25, 0.25], vec![f64::INFINITY, f64::INFINITY]).is_err());
        let e2 = e.with_s(2.0).unwrap();
        assert!(e2.clone().with_kernels(vec![0.25, 0.5], vec![4.0, 4.0]).is_ok());
        assert!(e2.with_kernels(vec![0.25, 0.5], vec![3.0, 4.0]).is_err());
    }
}
