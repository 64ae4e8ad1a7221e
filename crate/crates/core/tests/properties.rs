use proptest::prelude::*;

use rough_weights::geometry::LinearMap;
use rough_weights::grid::{pullback, CellBox, CellMask, CubeFamily, Grid, GridFunction, Weight};
use rough_weights::operators::{fractional_maximal, Budget, KernelEvaluator, OperatorSpec};
use rough_weights::sparse::{audit_cz, build_sparse_domination, cz_decompose, SparseBuildParams};
use rough_weights::verify::{render_report, ReportRow};
use rough_weights::weights::muckenhoupt_constant;

fn line() -> Grid {
    Grid::new(1, 0, 3).unwrap()
}

fn plane() -> Grid {
    Grid::new(2, 0, 2).unwrap()
}

fn values(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0f64..4.0, len)
}

fn positive(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..20.0, len)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn evaluator(grid: Grid) -> KernelEvaluator {
    let maps = vec![LinearMap::scalar(1, -1, 1).unwrap(), LinearMap::identity(1).unwrap()];
    let spec = OperatorSpec::power_product(1, 0.25, &[0.375, 0.375], maps).unwrap();
    KernelEvaluator::new(&spec, grid, Budget::guarded()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reflection_pullback_is_an_involution(v in values(16)) {
        let grid = line();
        let f = GridFunction::from_values(grid, v).unwrap();
        let a = LinearMap::scalar(1, -1, 1).unwrap();
        let once = pullback(&f, &a).unwrap().func;
        let twice = pullback(&once, &a).unwrap().func;
        prop_assert_eq!(twice.values(), f.values());
        prop_assert!(close(once.total(), f.total(), 1e-12));
    }

    #[test]
    fn swap_pullback_permutes_cells(v in values(64)) {
        let grid = plane();
        let f = GridFunction::from_values(grid, v).unwrap();
        let swap = LinearMap::from_pairs(2, &[(0, 1), (1, 1), (1, 1), (0, 1)]).unwrap();
        let g = pullback(&f, &swap).unwrap().func;
        let m = grid.cells_per_axis();
        for x in 0..m {
            for y in 0..m {
                prop_assert_eq!(g.values()[x + m * y], f.values()[y + m * x]);
            }
        }
    }

    #[test]
    fn fractional_maximal_is_monotone_and_homogeneous(v in values(16), bump in positive(16), c in 0.1f64..10.0) {
        let grid = line();
        let family = CubeFamily::lattice_union(grid);
        let f = GridFunction::from_values(grid, v).unwrap();
        let g = f.abs().add(&GridFunction::from_values(grid, bump).unwrap()).unwrap();
        let mf = fractional_maximal(&f, 0.25, 1.0, &family).unwrap();
        let mg = fractional_maximal(&g, 0.25, 1.0, &family).unwrap();
        let mcf = fractional_maximal(&f.scale(-c), 0.25, 1.0, &family).unwrap();
        for i in 0..grid.len() {
            prop_assert!(mf.values()[i] <= mg.values()[i] * (1.0 + 1e-12));
            prop_assert!(close(mcf.values()[i], c * mf.values()[i], 1e-12));
        }
    }

    #[test]
    fn class_constant_is_at_least_one_and_scale_invariant(v in positive(16), c in 0.01f64..100.0, p in 1.0f64..4.0) {
        let grid = line();
        let family = CubeFamily::lattice_union(grid);
        let id = LinearMap::identity(1).unwrap();
        let w = Weight::new(GridFunction::from_values(grid, v.clone()).unwrap()).unwrap();
        let cw = Weight::new(GridFunction::from_values(grid, v.iter().map(|x| x * c).collect()).unwrap()).unwrap();
        let k = muckenhoupt_constant(&w, &id, p, &family).unwrap().effective_value();
        let kc = muckenhoupt_constant(&cw, &id, p, &family).unwrap().effective_value();
        prop_assert!(k >= 1.0 - 1e-12);
        prop_assert!(close(k, kc, 1e-10));
    }

    #[test]
    fn operator_is_linear(f in values(16), g in values(16), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let grid = line();
        let ev = evaluator(grid);
        let f = GridFunction::from_values(grid, f).unwrap();
        let g = GridFunction::from_values(grid, g).unwrap();
        let lhs = ev.apply(&f.scale(a).add(&g.scale(b)).unwrap()).unwrap();
        let rhs = ev.apply(&f).unwrap().scale(a).add(&ev.apply(&g).unwrap().scale(b)).unwrap();
        let top = rhs.max_abs().max(1.0);
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() <= 1e-10 * top);
        }
    }

    #[test]
    fn cz_selection_passes_its_audit(bits in prop::collection::vec(prop::bool::weighted(0.1), 64), height in 0.15f64..0.9) {
        let grid = Grid::new(2, 1, 1).unwrap();
        let mask = CellMask::from_bits(grid, bits);
        let root = grid.full_box();
        let avg = mask.count() as f64 / root.cell_count() as f64;
        prop_assume!(avg <= height);
        let picked = cz_decompose(&mask, &root, height).unwrap();
        let audit = audit_cz(&mask, &root, height, &picked);
        prop_assert!(audit.passed(2), "{audit:?}");
        for (i, a) in picked.iter().enumerate() {
            for b in &picked[i + 1..] {
                prop_assert!(!a.intersects(b));
            }
        }
    }

    #[test]
    fn report_text_ignores_row_order(values in prop::collection::vec(-1e3f64..1e3, 1..12), seed in any::<u64>()) {
        let rows: Vec<ReportRow> = values
            .iter()
            .enumerate()
            .map(|(i, v)| ReportRow::at_most("demo", format!("q{i}"), *v, 0.0, "nonpositive"))
            .collect();
        let mut shuffled = rows.clone();
        let k = (seed % shuffled.len() as u64) as usize;
        shuffled.rotate_left(k);
        shuffled.reverse();
        prop_assert_eq!(render_report(&rows).unwrap(), render_report(&shuffled).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn small_grid_sparse_certificate(v in values(64), lo in 0usize..60, len in 1usize..12) {
        let grid = Grid::new(1, 1, 4).unwrap();
        let hi = (lo + len).min(grid.len());
        let mut vals = vec![0.0; grid.len()];
        vals[lo..hi].copy_from_slice(&v[lo..hi]);
        let f = GridFunction::from_values(grid, vals).unwrap();
        prop_assume!(!f.is_zero());
        let maps = vec![LinearMap::scalar(1, -1, 1).unwrap(), LinearMap::identity(1).unwrap()];
        let spec = OperatorSpec::power_product(1, 0.25, &[0.375, 0.375], maps).unwrap();
        let cert = build_sparse_domination(&spec, &f, &SparseBuildParams::new(1)).unwrap();
        prop_assert!(cert.is_certified());
        let root = CellBox::new(1, [0, 0], grid.cells_per_axis());
        prop_assert!(cert.roots.iter().all(|r| root.contains(r)));
    }
}
