use super::KernelEvaluator;
use crate::error::{Error, Result};
use crate::grid::Weight;

/// Largest grid for which the weighted matrix is stored densely.
pub const MAX_NORM_CELLS: usize = 1 << 12;

/// Result of the nonlinear power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate {
    /// Best quotient `‖Tf‖_{L^q(w^q)} / ‖f‖_{L^p(w^p)}` over the iterates.
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn lp(v: &[f64], r: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(r)).sum::<f64>().powf(1.0 / r)
}

/// Discrete operator norm of `T` from `L^p(w^p)` to `L^q(w^q)`, `1 < p <= q`,
/// by Boyd's power iteration on the nonnegative matrix
/// `B_xy = |cell|^{1/q} w(x) K(x, y) |cell| / (w(y) |cell|^{1/p})`.
///
/// Every iterate is a concrete input, so the value is always a lower bound on
/// the norm; for a positive matrix it converges to the norm itself.
pub fn weighted_norm_estimate(
    ev: &KernelEvaluator,
    w: &Weight,
    p: f64,
    q: f64,
    max_iter: usize,
) -> Result<NormEstimate> {
    let grid = ev.grid();
    if w.grid() != grid {
        return Err(Error::InvalidArgument("weight lives on a different grid".into()));
    }
    if !(p > 1.0 && q >= p && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 1 < p <= q < inf, got p = {p}, q = {q}")));
    }
    let n = grid.len();
    if n > MAX_NORM_CELLS {
        return Err(Error::Budget(format!("{n} cells exceed the dense norm limit of {MAX_NORM_CELLS}")));
    }
    let wv = w.values();
    if wv.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("weight must be positive and finite on every cell".into()));
    }
    let cv = grid.cell_volume();
    let scale = cv.powf(1.0 / q) * cv / cv.powf(1.0 / p);
    let mut b = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            b[x * n + y] = scale * wv[x] * ev.kernel(x, y) / wv[y];
        }
    }
    let forward = |v: &[f64]| -> Vec<f64> { (0..n).map(|x| b[x * n..(x + 1) * n].iter().zip(v).map(|(a, c)| a * c).sum()).collect() };
    let backward = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for x in 0..n {
            let vx = v[x];
            for (o, a) in out.iter_mut().zip(&b[x * n..(x + 1) * n]) {
                *o += a * vx;
            }
        }
        out
    };
    let mut g = vec![1.0; n];
    let norm = lp(&g, p);
    g.iter_mut().for_each(|v| *v /= norm);
    let mut best = 0.0f64;
    let mut last = 0.0f64;
    for it in 1..=max_iter {
        let bg = forward(&g);
        let value = lp(&bg, q);
        best = best.max(value);
        if it > 1 && (value - last).abs() <= 1e-10 * value {
            return Ok(NormEstimate { value: best, iterations: it, converged: true });
        }
        last = value;
        let dual: Vec<f64> = bg.iter().map(|v| v.powf(q - 1.0)).collect();
        let z = backward(&dual);
        g = z.iter().map(|v| v.powf(1.0 / (p - 1.0))).collect();
        let norm = lp(&g, p);
        if !(norm > 0.0) {
            break;
        }
        g.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(NormEstimate { value: best, iterations: max_iter, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LinearMap;
    use crate::grid::{Grid, GridFunction};
    use crate::operators::{Budget, OperatorSpec};

    fn setup() -> (KernelEvaluator, Grid) {
        let g = Grid::new(1, 1, 3).unwrap();
        let maps = vec![LinearMap::scalar(1, -1, 1).unwrap(), LinearMap::identity(1).unwrap()];
        let spec = OperatorSpec::power_product(1, 0.25, &[0.375, 0.375], maps).unwrap();
        (KernelEvaluator::new(&spec, g, Budget::guarded()).unwrap(), g)
    }

    #[test]
    fn dominates_concrete_quotients_and_obeys_the_schur_bound() {
        let (ev, g) = setup();
        let w = Weight::new(GridFunction::from_fn(g, |x| 1.0 + x[0].abs()).unwrap()).unwrap();
        let est = weighted_norm_estimate(&ev, &w, 2.0, 2.0, 500).unwrap();
        assert!(est.converged);
        let cv = g.cell_volume();
        let wv = w.values();
        let norm = |f: &[f64]| f.iter().zip(wv).map(|(a, b)| a * a * b * b * cv).sum::<f64>().sqrt();
        for k in 0..g.len() {
            let f = GridFunction::from_fn(g, |x| (x[0] * (k as f64 + 1.0)).cos().abs() + 0.1).unwrap();
            let tf = ev.apply(&f).unwrap();
            assert!(norm(tf.values()) / norm(f.values()) <= est.value * (1.0 + 1e-9));
        }
        // Schur: sigma <= sqrt(max row sum * max column sum) of the weighted matrix
        let n = g.len();
        let entry = |x: usize, y: usize| wv[x] * ev.kernel(x, y) * cv / wv[y];
        let row = (0..n).map(|x| (0..n).map(|y| entry(x, y)).sum::<f64>()).fold(0.0, f64::max);
        let col = (0..n).map(|y| (0..n).map(|x| entry(x, y)).sum::<f64>()).fold(0.0, f64::max);
        assert!(est.value <= (row * col).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn rejects_vanishing_weights_and_bad_exponents() {
        let (ev, g) = setup();
        let w = Weight::new(GridFunction::zeros(g)).unwrap();
        assert!(weighted_norm_estimate(&ev, &w, 2.0, 2.0, 10).is_err());
        let one = Weight::constant(g, 1.0).unwrap();
        assert!(weighted_norm_estimate(&ev, &one, 3.0, 2.0, 10).is_err());
        assert!(weighted_norm_estimate(&ev, &one, 1.0, 2.0, 10).is_err());
    }
}
