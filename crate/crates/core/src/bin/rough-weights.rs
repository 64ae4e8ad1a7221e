use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rough_weights::grid::CubeFamily;
use rough_weights::operators::{kernel_hormander_constant, kernel_size_constant, Budget, HormanderParams, KernelSpec};
use rough_weights::verify::{
    emit_report, lattice_rows, render_report, run_scenario, ExperimentConfig, ReportRow, Scenario,
};
use rough_weights::weights::{apq_constant, matrix_apq_constant};
use rough_weights::Result;

#[derive(Parser)]
#[command(name = "rough-weights", version, about = "Weighted inequalities for rough product-kernel operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Sectioned key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Lattice depth for `lattice-check`.
    #[arg(long, global = true)]
    depth: Option<i32>,
    /// Grid as `J,L`: box [-2^J, 2^J)^n, cells of side 2^-L.
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(i32, i32)>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the CSV report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Lift the dense-quadrature cell limit.
    #[arg(long, global = true)]
    override_budget: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Audit the shifted dyadic lattices.
    LatticeCheck,
    /// Size and Hörmander constants of the configured power kernels.
    Kernels,
    /// Class constants of the configured weight for each matrix.
    Weights,
    /// Sparse domination certificates over the test suite.
    Sparse,
    /// Run one scenario.
    Verify { scenario: Scenario },
    /// Run every scenario with its preset (or the config file for its own scenario).
    Report,
}

fn parse_grid(s: &str) -> std::result::Result<(i32, i32), String> {
    let (j, l) = s.split_once(',').ok_or("expected J,L")?;
    let j = j.trim().parse().map_err(|e| format!("J: {e}"))?;
    let l = l.trim().parse().map_err(|e| format!("L: {e}"))?;
    Ok((j, l))
}

impl Common {
    fn config(&self, scenario: Scenario) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let c = ExperimentConfig::load(path, Some(scenario))?;
                if c.scenario == scenario {
                    c
                } else {
                    ExperimentConfig::preset(scenario)
                }
            }
            None => ExperimentConfig::preset(scenario),
        };
        if let Some((j, l)) = self.grid {
            cfg.grid.j = j;
            cfg.grid.l = l;
            cfg.grid.levels.retain(|&k| k >= l);
            if cfg.grid.levels.is_empty() {
                cfg.grid.levels = vec![l, l + 1, l + 2];
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if self.override_budget {
            cfg.budget = Budget::unlimited();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn kernel_rows(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let n = cfg.grid.n;
    let scales: Vec<f64> = (-8..=8).map(|k| 2f64.powi(k)).collect();
    let probes: Vec<Vec<f64>> = [0.25, 0.5, 1.0].iter().map(|&t| vec![t; n]).collect();
    let mut rows = Vec::new();
    for (i, &a) in cfg.kernels.iter().enumerate() {
        let k = KernelSpec::power(a)?;
        let size = kernel_size_constant(&k, n, &scales)?;
        let horm = kernel_hormander_constant(&k, n, &probes, HormanderParams::default())?;
        let tag = format!("k{}", i + 1);
        for rep in [size, horm] {
            let verdict = if rep.stable { "stable" } else { "diverging" };
            rows.push(ReportRow::measured("kernels", format!("{tag}/{}", rep.quantity), rep.value).with_note(verdict));
        }
    }
    Ok(rows)
}

fn weight_rows(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let e = cfg.exponents()?;
    let mut rows = Vec::new();
    for grid in cfg.grid.trace_grids()? {
        let depth = grid.cells_per_axis().trailing_zeros();
        let w = cfg.weight.build(grid)?;
        let family = CubeFamily::lattice_union(grid);
        let plain = apq_constant(&w, &e, &family)?;
        rows.push(ReportRow::measured("weights", "apq", plain.effective_value()).at_depth(depth));
        for (i, a) in cfg.matrices.iter().enumerate() {
            let r = matrix_apq_constant(&w, a, &e, &family)?;
            rows.push(ReportRow::measured("weights", format!("a{}/matrix-apq", i + 1), r.effective_value()).at_depth(depth));
        }
    }
    Ok(rows)
}

fn run(cli: &Cli) -> Result<Vec<ReportRow>> {
    let c = &cli.common;
    match &cli.command {
        Command::LatticeCheck => match c.depth {
            Some(d) => {
                let mut rows = lattice_rows(1, d)?;
                rows.extend(lattice_rows(2, d)?);
                Ok(rows)
            }
            None => run_scenario(&c.config(Scenario::LatticeCheck)?),
        },
        Command::Kernels => kernel_rows(&c.config(Scenario::Sparse)?),
        Command::Weights => weight_rows(&c.config(Scenario::WeightTraces)?),
        Command::Sparse => run_scenario(&c.config(Scenario::Sparse)?),
        Command::Verify { scenario } => run_scenario(&c.config(*scenario)?),
        Command::Report => {
            let mut rows = Vec::new();
            for s in Scenario::ALL {
                eprintln!("running {s}");
                rows.extend(run_scenario(&c.config(s)?)?);
            }
            Ok(rows)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let rows = match run(&cli) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &cli.common.out {
        Some(path) => emit_report(&rows, path),
        None => render_report(&rows).map(|text| print!("{text}")),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let failed = rows.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        eprintln!("{failed} failing rows");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
