use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_time, rel_gap};
use crate::error::{Error, Result};
use crate::geometry::{audit_shifted_lattices, Cube, LinearMap};
use crate::grid::{pullback, CubeFamily, Grid, GridFunction};
use crate::operators::{composed_maximal, fractional_maximal};
use crate::sparse::{comp_sparse_check, SparseCube, SparseFamily};
use crate::verify::config::ExperimentConfig;
use crate::verify::report::ReportRow;
use crate::verify::suite::test_suite;

const LATTICE: &str = "lattice-check";

/// Exhaustive audit of the shifted lattices: `n = 1` to depth 6 and `n = 2` to depth 4.
pub fn run_lattice_check(_cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let start = std::time::Instant::now();
    let mut rows = lattice_rows(1, 6)?;
    rows.extend(lattice_rows(2, 4)?);
    rows.push(check_time(LATTICE, start, 10.0));
    Ok(rows)
}

/// Audit rows of the shifted lattices in dimension `n` down to `depth`.
pub fn lattice_rows(n: usize, depth: i32) -> Result<Vec<ReportRow>> {
    let base = Cube::from_ints(&vec![0; n], 1 << depth)?;
    let audit = audit_shifted_lattices(n, depth, &base)?;
    let tag = format!("n{n}-depth{depth}");
    let mut row = ReportRow::at_most(
        LATTICE,
        format!("{tag}/failures"),
        audit.failures.len() as f64,
        0.0,
        "every triple is a lattice member and has a triple-size container in each lattice; lattices nest",
    );
    if let Some(f) = audit.failures.first() {
        row = row.with_note(format!("first: {f}"));
    }
    Ok(vec![
        ReportRow::measured(LATTICE, format!("{tag}/reference-cubes"), audit.reference_cubes as f64),
        ReportRow::measured(LATTICE, format!("{tag}/lattice-cubes"), audit.lattice_cubes as f64),
        row,
    ])
}

/// `∫_{A(cell)} W` for every cell, by direct overlap of the image box with the grid.
pub(super) fn image_masses(grid: &Grid, w: &[f64], a: &LinearMap) -> Vec<f64> {
    let n = grid.dim();
    let h = grid.h();
    let half = grid.half_width();
    let m = grid.cells_per_axis();
    let axis_cells = |lo: f64, hi: f64| -> Vec<(usize, f64)> {
        let first = (((lo + half) / h).floor().max(0.0)) as usize;
        let last = (((hi + half) / h).ceil().min(m as f64)).max(0.0) as usize;
        (first..last)
            .filter_map(|k| {
                let c = -half + k as f64 * h;
                let len = hi.min(c + h) - lo.max(c);
                (len > 0.0).then_some((k, len))
            })
            .collect()
    };
    (0..grid.len())
        .map(|i| {
            let lo: Vec<f64> = (0..n).map(|k| grid.axis_lo(grid.coords(i)[k])).collect();
            let hi: Vec<f64> = lo.iter().map(|v| v + h).collect();
            let (p, q) = (a.apply_f64(&lo), a.apply_f64(&hi));
            let ranges: Vec<Vec<(usize, f64)>> = (0..n).map(|k| axis_cells(p[k].min(q[k]), p[k].max(q[k]))).collect();
            if n == 1 {
                ranges[0].iter().map(|&(k, l)| w[k] * l).sum()
            } else {
                let mut s = 0.0;
                for &(ky, ly) in &ranges[1] {
                    for &(kx, lx) in &ranges[0] {
                        s += w[kx + m * ky] * lx * ly;
                    }
                }
                s
            }
        })
        .collect()
}

/// Change of variables for the twisted fractional maximal function and the
/// level-set identity of the weak-type theorem, on the configured grid, weight
/// and matrices:
/// `∫ (M_α f)(A^{-1}x)^q W(x) dx = |det A| ∫ (M_α f)^q W_A` and
/// `W{x : M_α f(A^{-1} x) > λ} = |det A| W_A{M_α f > λ}` with `W = w^q`.
pub fn run_identities(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = "identities";
    let start = std::time::Instant::now();
    let grid = cfg.grid.grid()?;
    let e = cfg.exponents()?;
    let w = cfg.weight.build(grid)?;
    let big_w = w.pow(e.q());
    let family = CubeFamily::lattice_union(grid);
    let suite = test_suite(grid, cfg.seed, cfg.suite_size)?;
    let maximals: Vec<GridFunction> = suite
        .iter()
        .map(|t| fractional_maximal(&t.f, e.alpha(), 1.0, &family))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (ai, a) in cfg.matrices.iter().enumerate() {
        if !a.is_grid_compatible() {
            return Err(Error::IncompatibleMap(format!("matrix a{} is not grid-compatible", ai + 1)));
        }
        let det = a.det_f64().abs();
        let direct = image_masses(&grid, big_w.values(), a);
        let pulled = pullback(big_w.as_function(), a)?.func;
        let cv = grid.cell_volume();
        let (mut norm_gap, mut level_gap, mut composed_gap) = (0.0f64, 0.0f64, 0.0f64);
        // A^{-1} maps every cell inside one cell, so the grid pullback is pointwise
        let pointwise = a.inverse().is_non_expanding_axis_map();
        for (t, mf) in suite.iter().zip(&maximals) {
            let mq: Vec<f64> = mf.values().iter().map(|v| v.powf(e.q())).collect();
            let lhs: f64 = mq.iter().zip(&direct).map(|(m, d)| m * d).sum();
            let rhs: f64 = det * mq.iter().zip(pulled.values()).map(|(m, p)| m * p * cv).sum::<f64>();
            norm_gap = norm_gap.max(rel_gap(lhs, rhs));
            let top = mf.max_abs();
            for frac in [0.9, 0.5, 0.25, 0.1, 0.01] {
                let lambda = top * frac;
                let over = mf.values().iter().map(|&v| v > lambda);
                let (l, r) = over.zip(direct.iter().zip(pulled.values())).filter(|(o, _)| *o).fold(
                    (0.0, 0.0),
                    |(l, r), (_, (d, p))| (l + d, r + det * p * cv),
                );
                level_gap = level_gap.max(rel_gap(l, r));
            }
            if pointwise {
                let c = composed_maximal(&t.f, e.alpha(), 1.0, a, &family)?;
                let via: f64 = c
                    .values()
                    .iter()
                    .zip(big_w.values())
                    .map(|(v, wv)| v.powf(e.q()) * wv * cv)
                    .sum();
                composed_gap = composed_gap.max(rel_gap(via, lhs));
            }
        }
        let tag = format!("a{}", ai + 1);
        let inv = "change of variables under a grid-compatible map";
        rows.push(ReportRow::at_most(id, format!("{tag}/norm-identity"), norm_gap, cfg.tolerances.identity, inv));
        rows.push(ReportRow::at_most(
            id,
            format!("{tag}/level-set-identity"),
            level_gap,
            cfg.tolerances.identity,
            "level sets of the twisted maximal function",
        ));
        if pointwise {
            rows.push(ReportRow::at_most(
                id,
                format!("{tag}/composed-maximal"),
                composed_gap,
                cfg.tolerances.identity,
                inv,
            ));
        }
    }
    rows.push(check_time(id, start, 30.0));
    Ok(rows)
}

/// Random family of up to a dozen dyadic cubes, some nested.
fn random_family(grid: Grid, rng: &mut ChaCha8Rng) -> Result<SparseFamily> {
    let m = grid.cells_per_axis();
    let n = grid.dim();
    let top = (m / 4).max(1).trailing_zeros();
    let count = rng.gen_range(1..=12);
    let cubes = (0..count)
        .map(|_| {
            let side = 1usize << rng.gen_range(0..=top);
            let mut lo = [0i64; 2];
            for v in lo.iter_mut().take(n) {
                *v = (rng.gen_range(0..m / side) * side) as i64;
            }
            SparseCube::new(n, lo, side)
        })
        .collect();
    SparseFamily::new(grid, None, cubes, 1.0)
}

/// The composition identity between the sparse operator and its tilde form,
/// over `size` random `(S, f)` pairs.
pub fn run_comp_sparse(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = "comp-sparse";
    let start = std::time::Instant::now();
    let grid = cfg.grid.grid()?;
    let n = grid.dim() as f64;
    let suite = test_suite(grid, cfg.seed, cfg.suite_size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for t in &suite {
        let family = random_family(grid, &mut rng)?;
        let f = t.f.abs();
        // any r with 1 - rα/n in (0, 1]
        let r_max = if cfg.alpha > 0.0 { (n / cfg.alpha).min(3.0) } else { 3.0 };
        let r = 1.0 + rng.gen_range(0.0..1.0) * (r_max - 1.0) * 0.99;
        worst = worst.max(comp_sparse_check(&family, &f, cfg.alpha, r)?);
        pairs += 1;
    }
    Ok(vec![
        ReportRow::measured(id, "pairs", pairs as f64),
        ReportRow::at_most(
            id,
            "max-relative-deviation",
            worst,
            cfg.tolerances.identity,
            "sparse operator equals the r-th root of the tilde operator of f^r",
        ),
        check_time(id, start, 10.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_masses_cover_the_weight_once_for_reflections_and_dilations() {
        let g = Grid::new(1, 1, 2).unwrap();
        let w: Vec<f64> = (0..g.len()).map(|i| i as f64 + 1.0).collect();
        let total: f64 = w.iter().sum::<f64>() * g.cell_volume();
        let a = LinearMap::scalar(1, -1, 1).unwrap();
        let s: f64 = image_masses(&g, &w, &a).iter().sum();
        assert!((s - total).abs() < 1e-12);
        let d = LinearMap::scalar(1, 2, 1).unwrap();
        let s: f64 = image_masses(&g, &w, &d).iter().sum();
        assert!((s - total).abs() < 1e-12);
    }

    #[test]
    fn lattice_check_passes() {
        let rows = run_lattice_check(&ExperimentConfig::preset(crate::verify::Scenario::LatticeCheck)).unwrap();
        assert!(rows.iter().all(|r| !r.failed()));
    }
}
