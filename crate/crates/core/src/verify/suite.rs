use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{CellBox, Grid, GridFunction};

pub const DEFAULT_SUITE_SIZE: usize = 20;

/// What kind of member a suite entry is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Indicator,
    PairOfIndicators,
    Random,
    /// Sign-changing; only used where linearity is checked.
    Oscillating,
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    pub label: String,
    pub kind: TestKind,
    pub f: GridFunction,
}

/// Random dyadic cube of the grid with side between 1 cell and a quarter box.
fn random_cube(grid: &Grid, rng: &mut ChaCha8Rng) -> CellBox {
    let m = grid.cells_per_axis();
    let top = (m / 4).max(1).trailing_zeros();
    let side = 1usize << rng.gen_range(0..=top);
    let mut lo = [0usize; 2];
    for v in lo.iter_mut().take(grid.dim()) {
        *v = rng.gen_range(0..m / side) * side;
    }
    CellBox::new(grid.dim(), lo, side)
}

/// Seeded test functions: indicators of dyadic cubes, sums of two
/// indicators, random nonnegative fields on random cubes, and one
/// oscillating field (last). Fractions follow 30/25/rest of `size`.
pub fn test_suite(grid: Grid, seed: u64, size: usize) -> Result<Vec<TestFunction>> {
    if size < 4 {
        return Err(Error::InvalidArgument(format!("suite size {size} below 4")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_ind = size * 3 / 10;
    let n_pair = size / 4;
    let n_rand = size - 1 - n_ind - n_pair;
    let mut out = Vec::with_capacity(size);
    for k in 0..n_ind {
        let b = random_cube(&grid, &mut rng);
        out.push(TestFunction {
            label: format!("indicator-{k}"),
            kind: TestKind::Indicator,
            f: GridFunction::indicator_box(grid, &b),
        });
    }
    for k in 0..n_pair {
        let (a, b) = (random_cube(&grid, &mut rng), random_cube(&grid, &mut rng));
        let c = rng.gen_range(0.25..4.0);
        let f = GridFunction::indicator_box(grid, &a).add(&GridFunction::indicator_box(grid, &b).scale(c))?;
        out.push(TestFunction {
            label: format!("pair-{k}"),
            kind: TestKind::PairOfIndicators,
            f,
        });
    }
    for k in 0..n_rand {
        // alternate between fields on a random cube and on the whole box
        let b = if k % 2 == 0 { random_cube(&grid, &mut rng) } else { grid.full_box() };
        let mut v = vec![0.0; grid.len()];
        grid.for_each_cell(&b, |i| v[i] = rng.gen_range(0.0..1.0));
        out.push(TestFunction {
            label: format!("random-{k}"),
            kind: TestKind::Random,
            f: GridFunction::from_values(grid, v)?,
        });
    }
    let freq = 3.0 * std::f64::consts::PI / grid.half_width();
    out.push(TestFunction {
        label: "oscillating".into(),
        kind: TestKind::Oscillating,
        f: GridFunction::from_fn(grid, |x| (freq * x[0] + 0.7).sin() * (1.0 + 0.5 * x.iter().sum::<f64>().cos()))?,
    });
    Ok(out)
}
