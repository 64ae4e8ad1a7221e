use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, Weight};

/// Analytic weight families, discretized by cell averages.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightRecipe {
    Constant(f64),
    /// `|x|^β`.
    Power { beta: f64 },
    /// `max(|x|, floor)^β`.
    FlooredPower { beta: f64, floor: f64 },
    /// `Π_i |x_i|^{β_i}`.
    AxisProduct { betas: Vec<f64> },
    /// `e^{rate·x_0}`.
    Exponential { rate: f64 },
    /// `values[k]` on the radial band `radii[k-1] <= |x| < radii[k]`, evaluated at cell centers.
    Piecewise { radii: Vec<f64>, values: Vec<f64> },
    /// Pointwise product of recipes.
    Product(Vec<WeightRecipe>),
}

/// Average of `|x|^β` over `[a, b)`.
pub fn interval_power_average(a: f64, b: f64, beta: f64) -> Result<f64> {
    if !(b > a) {
        return Err(Error::InvalidArgument(format!("empty interval [{a}, {b})")));
    }
    if a < 0.0 && b > 0.0 {
        let left = interval_power_average(a, 0.0, beta)? * -a;
        let right = interval_power_average(0.0, b, beta)? * b;
        return Ok((left + right) / (b - a));
    }
    let (lo, hi) = if b <= 0.0 { (-b, -a) } else { (a, b) };
    if beta <= -1.0 && lo == 0.0 {
        return Err(Error::InvalidArgument(format!("|x|^{beta} is not integrable at the origin")));
    }
    if beta == -1.0 {
        return Ok((hi / lo).ln() / (hi - lo));
    }
    let e = beta + 1.0;
    Ok((hi.powf(e) - lo.powf(e)) / (e * (hi - lo)))
}

/// Average of `max(|x|, floor)^β` over `[a, b)`.
fn floored_interval_average(a: f64, b: f64, beta: f64, floor: f64) -> Result<f64> {
    let mut mass = 0.0;
    let (l, r) = (a.max(-floor), b.min(floor));
    if r > l {
        mass += floor.powf(beta) * (r - l);
    }
    for (lo, hi) in [(a, b.min(-floor)), (a.max(floor), b)] {
        if hi > lo {
            mass += interval_power_average(lo, hi, beta)? * (hi - lo);
        }
    }
    Ok(mass / (b - a))
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for k in 1..m {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += c * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Average of `|x|^β` over the square `[0, h)^2`, by radial integration.
fn corner_square_average(h: f64, beta: f64) -> Result<f64> {
    if beta <= -2.0 {
        return Err(Error::InvalidArgument(format!("|x|^{beta} is not integrable at the origin in the plane")));
    }
    let e = beta + 2.0;
    let ang = simpson(|t: f64| t.cos().powf(-e), 0.0, std::f64::consts::FRAC_PI_4, 512);
    Ok(2.0 * h.powf(beta) * ang / e)
}

const SUBSAMPLES: usize = 16;

fn square_power_average(x0: f64, y0: f64, h: f64, beta: f64) -> Result<f64> {
    let touches = |a: f64| a == 0.0 || a + h == 0.0;
    if touches(x0) && touches(y0) {
        return corner_square_average(h, beta);
    }
    let d = h / SUBSAMPLES as f64;
    let mut s = 0.0;
    for i in 0..SUBSAMPLES {
        for j in 0..SUBSAMPLES {
            let x = x0 + (i as f64 + 0.5) * d;
            let y = y0 + (j as f64 + 0.5) * d;
            s += (x * x + y * y).sqrt().powf(beta);
        }
    }
    Ok(s / (SUBSAMPLES * SUBSAMPLES) as f64)
}

fn floored_square_average(x0: f64, y0: f64, h: f64, beta: f64, floor: f64) -> Result<f64> {
    let near = |a: f64| if a > 0.0 { a } else if a + h < 0.0 { -(a + h) } else { 0.0 };
    let (nx, ny) = (near(x0), near(y0));
    if (nx * nx + ny * ny).sqrt() >= floor {
        return square_power_average(x0, y0, h, beta);
    }
    let d = h / SUBSAMPLES as f64;
    let mut s = 0.0;
    for i in 0..SUBSAMPLES {
        for j in 0..SUBSAMPLES {
            let x = x0 + (i as f64 + 0.5) * d;
            let y = y0 + (j as f64 + 0.5) * d;
            s += (x * x + y * y).sqrt().max(floor).powf(beta);
        }
    }
    Ok(s / (SUBSAMPLES * SUBSAMPLES) as f64)
}

impl WeightRecipe {
    pub fn power(beta: f64) -> Self {
        WeightRecipe::Power { beta }
    }

    pub fn build(&self, grid: Grid) -> Result<Weight> {
        Weight::new(GridFunction::from_values(grid, self.cell_values(grid)?)?)
    }

    fn cell_values(&self, grid: Grid) -> Result<Vec<f64>> {
        let n = grid.dim();
        let h = grid.h();
        let lo = |i: usize, k: usize| grid.axis_lo(grid.coords(i)[k]);
        let len = grid.len();
        match self {
            WeightRecipe::Constant(c) => {
                if !(*c >= 0.0) || !c.is_finite() {
                    return Err(Error::InvalidArgument(format!("constant weight {c}")));
                }
                Ok(vec![*c; len])
            }
            WeightRecipe::Power { beta } => (0..len)
                .map(|i| {
                    if n == 1 {
                        interval_power_average(lo(i, 0), lo(i, 0) + h, *beta)
                    } else {
                        square_power_average(lo(i, 0), lo(i, 1), h, *beta)
                    }
                })
                .collect(),
            WeightRecipe::FlooredPower { beta, floor } => {
                if !(*floor > 0.0) || !floor.is_finite() {
                    return Err(Error::InvalidArgument(format!("power floor must be positive, got {floor}")));
                }
                (0..len)
                    .map(|i| {
                        if n == 1 {
                            floored_interval_average(lo(i, 0), lo(i, 0) + h, *beta, *floor)
                        } else {
                            floored_square_average(lo(i, 0), lo(i, 1), h, *beta, *floor)
                        }
                    })
                    .collect()
            }
            WeightRecipe::AxisProduct { betas } => {
                if betas.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: betas.len(),
                    });
                }
                (0..len)
                    .map(|i| {
                        let mut v = 1.0;
                        for (k, b) in betas.iter().enumerate() {
                            v *= interval_power_average(lo(i, k), lo(i, k) + h, *b)?;
                        }
                        Ok(v)
                    })
                    .collect()
            }
            WeightRecipe::Exponential { rate } => Ok((0..len)
                .map(|i| {
                    let a = lo(i, 0);
                    if *rate == 0.0 {
                        1.0
                    } else {
                        ((rate * (a + h)).exp() - (rate * a).exp()) / (rate * h)
                    }
                })
                .collect()),
            WeightRecipe::Piecewise { radii, values } => {
                if values.len() != radii.len() + 1 {
                    return Err(Error::InvalidArgument("piecewise weight needs one more value than radii".into()));
                }
                if radii.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidArgument("piecewise radii must increase".into()));
                }
                Ok((0..len)
                    .map(|i| {
                        let c = grid.cell_center(i);
                        let r = c.iter().map(|x| x * x).sum::<f64>().sqrt();
                        values[radii.partition_point(|&t| t <= r)]
                    })
                    .collect())
            }
            WeightRecipe::Product(parts) => {
                let mut out = vec![1.0; len];
                for part in parts {
                    for (o, v) in out.iter_mut().zip(part.cell_values(grid)?) {
                        *o *= v;
                    }
                }
                Ok(out)
            }
        }
    }
}
