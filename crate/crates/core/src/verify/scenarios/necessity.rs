use std::time::Instant;

use super::check_time;
use crate::error::{Error, Result};
use crate::geometry::{check_hypothesis_h, LinearMap};
use crate::grid::{CellBox, CubeFamily, Grid, GridFunction, Weight};
use crate::operators::{KernelEvaluator, OperatorSpec};
use crate::verify::config::ExperimentConfig;
use crate::verify::report::ReportRow;
use crate::verify::suite::test_suite;
use crate::weights::{RefinementTrace, TraceVerdict, WeightRecipe};

/// Cell box of `A(b)` when it is exactly a union of cells inside the box.
pub(super) fn image_box(grid: &Grid, a: &LinearMap, b: &CellBox) -> Option<CellBox> {
    let n = grid.dim();
    let h = grid.h();
    let half = grid.half_width();
    let lo: Vec<f64> = (0..n).map(|k| grid.axis_lo(b.lo[k])).collect();
    let hi: Vec<f64> = lo.iter().map(|v| v + b.side as f64 * h).collect();
    let (p, q) = (a.apply_f64(&lo), a.apply_f64(&hi));
    let mut out = [0usize; 2];
    let mut side = None;
    for k in 0..n {
        let (l, r) = (p[k].min(q[k]), p[k].max(q[k]));
        let (cl, cr) = ((l + half) / h, (r + half) / h);
        if cl.fract() != 0.0 || cr.fract() != 0.0 || cl < 0.0 || cr > grid.cells_per_axis() as f64 {
            return None;
        }
        let s = (cr - cl) as usize;
        if s == 0 || side.is_some_and(|t| t != s) {
            return None;
        }
        side = Some(s);
        out[k] = cl as usize;
    }
    Some(CellBox::new(n, out, side?))
}

/// Per-depth results of one weight.
struct Depth {
    depth: u32,
    /// `min_B min_{x∈B} T(χ_{B_i} v)(x) / (|B|^{α/n-1} v(B_i))`.
    lower: f64,
    /// `lower` over the cubes whose center is within one side length of the origin.
    lower_near: f64,
    /// `max_{B,i} |B|^{α/n-1} u(B)^{1/q} v(B_i)^{1/p'}`.
    weight_sup: f64,
    /// `sup ‖T(g v)‖_{L^q(u)} / ‖g‖_{L^p(v)}` over the `χ_{B_i}` and the suite.
    quotient: f64,
    /// `max_{B,i}` of the per-cube slack `weight(B,i) · C(B,i) / quotient(B,i)` (≤ 1).
    cube_slack: f64,
}

fn one_depth(cfg: &ExperimentConfig, grid: Grid, recipe: &WeightRecipe) -> Result<Depth> {
    let e = cfg.exponents()?;
    let n = grid.dim();
    let spec = OperatorSpec::power_product(n, cfg.alpha, &cfg.kernels, cfg.matrices.clone())?;
    let ev = KernelEvaluator::new(&spec, grid, cfg.budget)?;
    let w = recipe.build(grid)?;
    let u = w.pow(e.q());
    let v = w.pow(-e.p_conj());
    if u.has_infinite() || v.has_infinite() {
        return Err(Error::InvalidArgument("weights with infinite cells are not supported here".into()));
    }
    let cv = grid.cell_volume();
    let all: Vec<usize> = (0..grid.len()).collect();
    let q_norm = |tg: &[f64]| -> f64 {
        tg.iter().zip(u.values()).map(|(t, uu)| t.abs().powf(e.q()) * uu * cv).sum::<f64>().powf(1.0 / e.q())
    };
    let mass = |wt: &Weight, b: &CellBox| wt.mass(b);
    let mut d = Depth {
        depth: grid.cells_per_axis().trailing_zeros(),
        lower: f64::INFINITY,
        lower_near: f64::INFINITY,
        weight_sup: 0.0,
        quotient: 0.0,
        cube_slack: 0.0,
    };
    let inverses: Vec<LinearMap> = cfg.matrices.iter().map(|a| a.inverse()).collect();
    for b in CubeFamily::reference(grid).boxes() {
        let vol = grid.box_volume(b);
        let scale = vol.powf(e.alpha() / n as f64 - 1.0);
        let ub = mass(&u, b);
        let len = b.side as f64 * grid.h();
        let near = (0..n).all(|k| (grid.axis_lo(b.lo[k]) + len / 2.0).abs() <= len);
        for inv in &inverses {
            let Some(bi) = image_box(&grid, inv, b) else { continue };
            let vbi = mass(&v, &bi);
            if !(vbi > 0.0) {
                continue;
            }
            let sources = grid.cells_of(&bi);
            let tg = ev.eval_at(v.values(), &sources, &all);
            let mut low = f64::INFINITY;
            grid.for_each_cell(b, |x| low = low.min(tg[x]));
            let c = low / (scale * vbi);
            let weight = scale * ub.powf(1.0 / e.q()) * vbi.powf(1.0 / e.p_conj());
            let quot = q_norm(&tg) / vbi.powf(1.0 / e.p());
            d.lower = d.lower.min(c);
            if near {
                d.lower_near = d.lower_near.min(c);
            }
            d.weight_sup = d.weight_sup.max(weight);
            d.quotient = d.quotient.max(quot);
            d.cube_slack = d.cube_slack.max(weight * c / quot);
        }
    }
    for t in test_suite(grid, cfg.seed, cfg.suite_size)? {
        let g = t.f.abs();
        let den = g
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| a.powf(e.p()) * b * cv)
            .sum::<f64>()
            .powf(1.0 / e.p());
        if !(den > 0.0) {
            continue;
        }
        let gv = GridFunction::from_values(grid, g.values().iter().zip(v.values()).map(|(a, b)| a * b).collect())?;
        let tg = ev.apply(&gv)?;
        d.quotient = d.quotient.max(q_norm(tg.values()) / den);
    }
    Ok(d)
}

/// Pointwise lower bound of the two-factor power operator on cubes and the
/// necessity of both matrix weight classes, traced over refinement.
pub fn run_ejem(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = "necessity";
    let start = Instant::now();
    if cfg.matrices.len() != 2 {
        return Err(Error::Config("the necessity scenario needs exactly two matrices".into()));
    }
    if cfg.kernels.len() != 2 {
        return Err(Error::Config("the necessity scenario needs two kernel exponents".into()));
    }
    if !check_hypothesis_h(&cfg.matrices)?.holds {
        return Err(Error::Config("A_1, A_2 and A_1 - A_2 must be invertible".into()));
    }
    let grids = cfg.grid.trace_grids()?;
    let recipes: Vec<(String, WeightRecipe)> = if cfg.sweep.is_empty() {
        vec![("weight".into(), cfg.weight.clone())]
    } else {
        cfg.sweep.iter().map(|&b| (format!("beta={b}"), WeightRecipe::power(b))).collect()
    };
    let mut rows = Vec::new();
    for (label, recipe) in &recipes {
        let depths: Vec<Depth> = grids.iter().map(|&g| one_depth(cfg, g, recipe)).collect::<Result<_>>()?;
        let mut lower = RefinementTrace::default();
        let mut sup = RefinementTrace::default();
        let mut quot = RefinementTrace::default();
        for d in &depths {
            lower.push(d.depth, d.lower);
            sup.push(d.depth, d.weight_sup);
            quot.push(d.depth, d.quotient);
            rows.push(ReportRow::measured(id, format!("{label}/lower-constant"), d.lower).at_depth(d.depth));
            rows.push(ReportRow::measured(id, format!("{label}/lower-constant-near-origin"), d.lower_near).at_depth(d.depth));
            rows.push(ReportRow::measured(id, format!("{label}/weight-sup"), d.weight_sup).at_depth(d.depth));
            rows.push(ReportRow::measured(id, format!("{label}/strong-quotient"), d.quotient).at_depth(d.depth));
            rows.push(
                ReportRow::at_most(
                    id,
                    format!("{label}/necessity"),
                    d.weight_sup,
                    d.quotient / d.lower,
                    "weight supremum bounded by strong quotient over the lower-bound constant",
                )
                .at_depth(d.depth)
                .with_note(format!("per-cube slack {:.4}", d.cube_slack)),
            );
        }
        let cmin = depths.iter().map(|d| d.lower).fold(f64::INFINITY, f64::min);
        rows.push(ReportRow::asserted(
            id,
            format!("{label}/lower-constant-positive"),
            cmin,
            Some(0.0),
            cmin > 0.0,
            "kernel bounded below by a multiple of R^(alpha-n) on cube pairs",
        ));
        let k = depths.len();
        let variation = depths
            .windows(2)
            .skip(k.saturating_sub(3))
            .map(|w| (w[1].lower - w[0].lower).abs() / w[0].lower)
            .fold(0.0, f64::max);
        rows.push(ReportRow::at_most(
            id,
            format!("{label}/lower-constant-variation"),
            variation,
            cfg.tolerances.variation,
            "lower-bound constant stable under refinement",
        ));
        let near_variation = depths
            .windows(2)
            .skip(k.saturating_sub(3))
            .map(|w| (w[1].lower_near - w[0].lower_near).abs() / w[0].lower_near)
            .fold(0.0, f64::max);
        rows.push(
            ReportRow::measured(id, format!("{label}/lower-constant-near-origin-variation"), near_variation).with_note(
                "cubes with |c_B| <= side; far from the origin |x - A_2 y| ~ |c_B| and the constant decays like (side/|c_B|)^alpha_2",
            ),
        );
        let (sv, qv) = (sup.verdict(), quot.verdict());
        rows.push(
            ReportRow::measured(id, format!("{label}/trace-verdicts"), sup.ratios().last().copied().unwrap_or(f64::NAN))
                .with_note(format!(
                    "weight sup {sv}, quotient {qv}{}",
                    if sv == TraceVerdict::Diverging && qv == TraceVerdict::Diverging { " (joint divergence)" } else { "" }
                )),
        );
    }
    rows.push(check_time(id, start, 120.0));
    Ok(rows)
}
