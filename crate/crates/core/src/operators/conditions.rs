use super::KernelSpec;
use crate::error::{Error, Result};

/// Outcome of a size or Hörmander estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConditionReport {
    pub quantity: &'static str,
    /// Running sup (size) or sup over probes of the partial sum (Hörmander).
    pub value: f64,
    /// `(t, running sup)` per scale, or `(M, partial sum)` for the worst probe.
    pub trace: Vec<(f64, f64)>,
    pub stable: bool,
    /// `c_r` used in `R > c_r |x|` (Hörmander only).
    pub c_r: Option<f64>,
}

impl KernelConditionReport {
    pub fn diverging(&self) -> bool {
        !self.stable
    }
}

const RADIAL_STEPS: usize = 2000;
const ANGULAR_STEPS: usize = 256;

fn annulus_average(k: &KernelSpec, n: usize, inner: f64, outer: f64, r: f64) -> f64 {
    if r.is_infinite() {
        return (0..=RADIAL_STEPS)
            .map(|i| k.eval(inner + (outer - inner) * i as f64 / RADIAL_STEPS as f64).abs())
            .fold(0.0, f64::max);
    }
    let d = (outer - inner) / RADIAL_STEPS as f64;
    let mut s = 0.0;
    for i in 0..RADIAL_STEPS {
        let rho = inner + (i as f64 + 0.5) * d;
        let w = if n == 1 { 1.0 } else { rho };
        s += k.eval(rho).abs().powf(r) * w;
    }
    let norm = if n == 1 {
        outer - inner
    } else {
        (outer * outer - inner * inner) / 2.0
    };
    (s * d / norm).powf(1.0 / r)
}

/// `sup_t t^{α_i} ‖k‖_{r_i, t < |x| ≤ 2t}` over the given scales.
pub fn kernel_size_constant(k: &KernelSpec, n: usize, scales: &[f64]) -> Result<KernelConditionReport> {
    if n == 0 || n > 2 {
        return Err(Error::Dimension(n));
    }
    if scales.len() < 3 || scales.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument("need at least three positive finite scales".into()));
    }
    let mut sorted = scales.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut running = 0.0f64;
    let mut trace = Vec::with_capacity(sorted.len());
    for &t in &sorted {
        let avg = annulus_average(k, n, t, 2.0 * t, k.r);
        if !avg.is_finite() {
            return Err(Error::InvalidArgument(format!("profile not evaluable on the annulus at t = {t}")));
        }
        running = running.max(t.powf(k.exponent) * avg);
        trace.push((t, running));
    }
    let l = trace.len();
    let earlier = trace[l - 3].1;
    let stable = running <= earlier * (1.0 + 1e-9) || running == 0.0;
    Ok(KernelConditionReport {
        quantity: "size",
        value: running,
        trace,
        stable,
        c_r: None,
    })
}

/// Parameters of the Hörmander estimate: `R = margin · c_r · |x|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HormanderParams {
    pub c_r: f64,
    pub margin: f64,
    pub m_trunc: usize,
    /// Largest admissible `|y|`, when the estimate must stay inside a box.
    pub limit: Option<f64>,
}

impl Default for HormanderParams {
    fn default() -> Self {
        HormanderParams {
            c_r: 2.0,
            margin: 1.5,
            m_trunc: 12,
            limit: None,
        }
    }
}

fn difference_average(k: &KernelSpec, n: usize, x: &[f64], inner: f64, outer: f64, r: f64) -> f64 {
    let d = (outer - inner) / RADIAL_STEPS as f64;
    let mut acc = 0.0f64;
    let mut weight = 0.0;
    let mut visit = |y: &[f64], w: f64| {
        let ry = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rx = y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let diff = (k.eval(rx) - k.eval(ry)).abs();
        if r.is_infinite() {
            acc = acc.max(diff);
        } else {
            acc += diff.powf(r) * w;
            weight += w;
        }
    };
    for i in 0..RADIAL_STEPS {
        let rho = inner + (i as f64 + 0.5) * d;
        if n == 1 {
            visit(&[rho], d);
            visit(&[-rho], d);
        } else {
            let dt = std::f64::consts::TAU / ANGULAR_STEPS as f64;
            for j in 0..ANGULAR_STEPS {
                let th = (j as f64 + 0.5) * dt;
                visit(&[rho * th.cos(), rho * th.sin()], rho * d * dt);
            }
        }
    }
    if r.is_infinite() {
        acc
    } else {
        (acc / weight).powf(1.0 / r)
    }
}

/// Partial sums `Σ_{m ≤ M} (2^m R)^{α_i} ‖k(· - x) - k‖_{r_i, |y| ∼ 2^m R}` per probe.
pub fn kernel_hormander_constant(
    k: &KernelSpec,
    n: usize,
    probes: &[Vec<f64>],
    params: HormanderParams,
) -> Result<KernelConditionReport> {
    if n == 0 || n > 2 {
        return Err(Error::Dimension(n));
    }
    if params.m_trunc < 4 {
        return Err(Error::InvalidArgument("truncation index must be at least 4".into()));
    }
    if !(params.c_r > 1.0) || !(params.margin > 1.0) {
        return Err(Error::InvalidArgument("need c_r > 1 and margin > 1".into()));
    }
    let mut best: Option<(f64, Vec<(f64, f64)>, bool)> = None;
    for x in probes {
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let big_r = params.margin * params.c_r * norm;
        if let Some(lim) = params.limit {
            let reach = (2f64).powi(params.m_trunc as i32 + 1) * big_r + norm;
            if reach > lim {
                return Err(Error::OutOfRange(format!(
                    "annuli reach |y| = {reach:.3e} beyond the box limit {lim}; reduce the probe or M"
                )));
            }
        }
        let mut sum = 0.0;
        let mut trace = Vec::with_capacity(params.m_trunc);
        let mut terms = Vec::with_capacity(params.m_trunc);
        for m in 1..=params.m_trunc {
            let term = if norm == 0.0 {
                0.0
            } else {
                let t = (2f64).powi(m as i32) * big_r;
                t.powf(k.exponent) * difference_average(k, n, x, t, 2.0 * t, k.r)
            };
            sum += term;
            terms.push(term);
            trace.push((m as f64, sum));
        }
        let l = terms.len();
        let stable = terms[l - 1] + terms[l - 2] <= 0.01 * sum || sum == 0.0;
        if best.as_ref().is_none_or(|b| sum > b.0) {
            best = Some((sum, trace, stable));
        }
    }
    let (value, trace, stable) = best.ok_or_else(|| Error::InvalidArgument("no probes".into()))?;
    Ok(KernelConditionReport {
        quantity: "hormander",
        value,
        trace,
        stable,
        c_r: Some(params.c_r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scales() -> Vec<f64> {
        (-4..=6).map(|k| (2f64).powi(k)).collect()
    }

    #[test]
    fn power_kernel_size_is_one() {
        for n in [1, 2] {
            let k = KernelSpec::power(0.5).unwrap();
            let rep = kernel_size_constant(&k, n, &scales()).unwrap();
            assert_relative_eq!(rep.value, 1.0, max_relative = 1e-12);
            assert!(rep.stable);
        }
    }

    #[test]
    fn perturbed_exponent_diverges() {
        let mut k = KernelSpec::power(0.4).unwrap();
        k.exponent = 0.5;
        let rep = kernel_size_constant(&k, 1, &scales()).unwrap();
        assert!(rep.diverging());
        let zero = KernelSpec::power_with(0.0, 0.5, f64::INFINITY).unwrap();
        let rep = kernel_size_constant(&zero, 1, &scales()).unwrap();
        assert_eq!(rep.value, 0.0);
        assert!(rep.stable);
    }

    #[test]
    fn hormander_for_power_kernel() {
        let k = KernelSpec::power(0.5).unwrap();
        let probes = vec![vec![0.1], vec![-0.3], vec![1.0]];
        let rep = kernel_hormander_constant(&k, 1, &probes, HormanderParams::default()).unwrap();
        assert!(rep.value.is_finite() && rep.value > 0.0);
        assert!(rep.stable, "{rep:?}");
        assert!(rep.trace.windows(2).all(|w| w[1].1 >= w[0].1));
        let zero = kernel_hormander_constant(&k, 1, &[vec![0.0]], HormanderParams::default()).unwrap();
        assert_eq!(zero.value, 0.0);
    }
}
