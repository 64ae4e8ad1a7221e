use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::LinearMap;
use crate::grid::Grid;
use crate::operators::Budget;
use crate::weights::{ExponentSet, WeightRecipe};

/// Experiments the driver knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    LatticeCheck,
    Identities,
    CompSparse,
    Sparse,
    WeightTraces,
    Sawyer,
    Appendix,
    WeakType,
    Ejem,
    Apart,
    Lemmas,
}

impl Scenario {
    pub const ALL: [Scenario; 11] = [
        Scenario::LatticeCheck,
        Scenario::Identities,
        Scenario::CompSparse,
        Scenario::Sparse,
        Scenario::WeightTraces,
        Scenario::Sawyer,
        Scenario::Appendix,
        Scenario::WeakType,
        Scenario::Ejem,
        Scenario::Apart,
        Scenario::Lemmas,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Scenario::LatticeCheck => "lattice-check",
            Scenario::Identities => "identities",
            Scenario::CompSparse => "comp-sparse",
            Scenario::Sparse => "sparse",
            Scenario::WeightTraces => "weight-traces",
            Scenario::Sawyer => "sawyer",
            Scenario::Appendix => "appendix",
            Scenario::WeakType => "weak-type",
            Scenario::Ejem => "necessity",
            Scenario::Apart => "apart-scaling",
            Scenario::Lemmas => "pointwise-lemmas",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|c| c.id() == s.trim())
            .ok_or_else(|| {
                let known: Vec<&str> = Scenario::ALL.iter().map(|c| c.id()).collect();
                Error::Config(format!("unknown scenario `{s}` (known: {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSettings {
    pub n: usize,
    pub j: i32,
    pub l: i32,
    /// Cell levels `L` of a refinement trace, coarse to fine.
    pub levels: Vec<i32>,
}

impl GridSettings {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.j, self.l)
    }

    pub fn trace_grids(&self) -> Result<Vec<Grid>> {
        self.levels.iter().map(|&l| Grid::new(self.n, self.j, l)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Relative error allowed in exact identities.
    pub identity: f64,
    /// Largest max/min ratio of a measured constant across a suite.
    pub spread: f64,
    /// Largest relative change of a constant between refinements.
    pub variation: f64,
    /// Allowed gap between a fitted and a predicted exponent.
    pub exponent: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-12,
            spread: 10.0,
            variation: 0.2,
            exponent: 0.25,
        }
    }
}

/// Everything one scenario run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub grid: GridSettings,
    pub weight: WeightRecipe,
    /// Power-weight exponents `β` swept by scenarios that trace a family.
    pub sweep: Vec<f64>,
    pub matrices: Vec<LinearMap>,
    pub alpha: f64,
    pub p: f64,
    /// `None` means the Sobolev exponent `1/q = 1/p - α/n`.
    pub q: Option<f64>,
    pub s: f64,
    /// Power-kernel decay exponents `α_i`, one per matrix.
    pub kernels: Vec<f64>,
    pub seed: u64,
    pub suite_size: usize,
    pub tolerances: Tolerances,
    /// Dense-quadrature cost guard; not settable from the file.
    pub budget: Budget,
}

fn reflection(n: usize) -> Vec<LinearMap> {
    vec![
        LinearMap::scalar(n, -1, 1).expect("valid map"),
        LinearMap::identity(n).expect("valid map"),
    ]
}

fn dilations(n: usize) -> Vec<LinearMap> {
    vec![
        LinearMap::scalar(n, 2, 1).expect("valid map"),
        LinearMap::scalar(n, 1, 2).expect("valid map"),
    ]
}

impl ExperimentConfig {
    /// Built-in desk-scale settings of a scenario.
    pub fn preset(scenario: Scenario) -> Self {
        let mut c = ExperimentConfig {
            scenario,
            grid: GridSettings {
                n: 1,
                j: 2,
                l: 5,
                levels: vec![4, 5, 6],
            },
            weight: WeightRecipe::Constant(1.0),
            sweep: Vec::new(),
            matrices: reflection(1),
            alpha: 0.0,
            p: 2.0,
            q: None,
            s: 1.0,
            kernels: Vec::new(),
            seed: 1,
            suite_size: super::DEFAULT_SUITE_SIZE,
            tolerances: Tolerances::default(),
            budget: Budget::guarded(),
        };
        match scenario {
            Scenario::LatticeCheck => {}
            Scenario::Identities => {
                c.grid = GridSettings {
                    n: 2,
                    j: 1,
                    l: 4,
                    levels: vec![4],
                };
                c.alpha = 0.5;
                c.weight = WeightRecipe::power(0.3);
                c.matrices = ["-1,0;0,-1", "0,1;1,0", "0,-1;1,0", "2,0;0,2", "1/2,0;0,1", "0,2;-1/2,0"]
                    .iter()
                    .map(|s| parse_matrix(2, s).expect("valid preset"))
                    .collect();
            }
            Scenario::CompSparse => {
                c.grid.l = 6;
                c.alpha = 0.25;
                c.suite_size = 50;
            }
            Scenario::Sparse => {
                c.grid = GridSettings {
                    n: 1,
                    j: 3,
                    l: 8,
                    levels: vec![8],
                };
                c.alpha = 0.25;
                c.kernels = vec![0.375, 0.375];
            }
            Scenario::WeightTraces => {
                c.grid = GridSettings {
                    n: 1,
                    j: 3,
                    l: 6,
                    levels: vec![4, 5, 6, 7, 8],
                };
                c.weight = WeightRecipe::power(0.0);
                c.sweep = vec![-0.5, -0.25, 0.0, 0.25, 0.5, 1.0];
                c.matrices = vec![LinearMap::scalar(1, -1, 1).expect("valid map")];
            }
            Scenario::Sawyer => {
                c.grid.l = 6;
                c.alpha = 0.25;
                c.weight = WeightRecipe::power(0.2);
                c.matrices = vec![LinearMap::scalar(1, -1, 1).expect("valid map")];
            }
            Scenario::Appendix => {
                c.grid = GridSettings {
                    n: 1,
                    j: 2,
                    l: 4,
                    levels: vec![4],
                };
            }
            Scenario::WeakType => {
                c.grid.levels = vec![4, 5, 6, 7];
                c.matrices = vec![LinearMap::scalar(1, -1, 1).expect("valid map")];
                c.sweep = vec![0.0, 0.25, 1.0];
            }
            Scenario::Ejem => {
                c.grid = GridSettings {
                    n: 1,
                    j: 2,
                    l: 6,
                    levels: vec![5, 6, 7],
                };
                c.alpha = 0.25;
                c.kernels = vec![0.375, 0.375];
                c.weight = WeightRecipe::power(0.2);
                c.sweep = vec![0.2, -0.1, 1.5];
            }
            Scenario::Apart => {
                c.grid = GridSettings {
                    n: 1,
                    j: 3,
                    l: 8,
                    levels: vec![8],
                };
                c.matrices = dilations(1);
                c.kernels = vec![0.5, 0.5];
                // boundary power floored at 2^-3 .. 2^-7, well inside the box and above the cell size
                c.weight = WeightRecipe::FlooredPower { beta: 0.5, floor: 1.0 };
                c.sweep = vec![0.125, 0.0625, 0.03125, 0.015625, 0.0078125];
            }
            Scenario::Lemmas => {
                c.grid.l = 6;
                c.alpha = 0.25;
                c.kernels = vec![0.375, 0.375];
            }
        }
        c
    }

    /// Reads a sectioned `key = value` file on top of the preset of its
    /// scenario. The scenario comes from a top-level `scenario = …` line or
    /// from `fallback`.
    pub fn parse(text: &str, fallback: Option<Scenario>) -> Result<Self> {
        let mut entries: Vec<(String, String, String, usize)> = Vec::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::Config(format!("line {}: unknown section [{name}]", no + 1)));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            entries.push((section.clone(), k.trim().to_string(), v.trim().to_string(), no + 1));
        }
        let mut scenario = fallback;
        for (s, k, v, no) in &entries {
            if s.is_empty() {
                if k != "scenario" {
                    return Err(Error::Config(format!("line {no}: unknown top-level key `{k}`")));
                }
                scenario = Some(v.parse()?);
            }
        }
        let scenario = scenario.ok_or_else(|| Error::Config("no scenario given".into()))?;
        let mut c = ExperimentConfig::preset(scenario);
        let mut weight_keys: Vec<(String, String)> = Vec::new();
        let mut matrix_keys: Vec<(usize, String)> = Vec::new();
        for (s, k, v, no) in entries.into_iter().filter(|e| !e.0.is_empty()) {
            let at = |e: Error| Error::Config(format!("line {no}: [{s}] {k}: {e}"));
            match (s.as_str(), k.as_str()) {
                ("grid", "n") => c.grid.n = parse_num(&v).map_err(at)?,
                ("grid", "j") => c.grid.j = parse_num(&v).map_err(at)?,
                ("grid", "l") => c.grid.l = parse_num(&v).map_err(at)?,
                ("grid", "levels") => c.grid.levels = parse_list(&v).map_err(at)?,
                ("weight", "recipe" | "beta" | "floor" | "betas" | "value" | "rate" | "radii" | "values") => {
                    weight_keys.push((k.clone(), v))
                }
                ("weight", "sweep") => c.sweep = parse_list(&v).map_err(at)?,
                ("matrices", key) => {
                    let idx = key
                        .strip_prefix('a')
                        .and_then(|d| d.parse::<usize>().ok())
                        .filter(|&i| i >= 1)
                        .ok_or_else(|| Error::Config(format!("line {no}: matrix keys are a1, a2, …; got `{key}`")))?;
                    matrix_keys.push((idx, v));
                }
                ("exponents", "alpha") => c.alpha = parse_num(&v).map_err(at)?,
                ("exponents", "p") => c.p = parse_num(&v).map_err(at)?,
                ("exponents", "q") => {
                    c.q = if v == "sobolev" { None } else { Some(parse_num(&v).map_err(at)?) }
                }
                ("exponents", "s") => c.s = parse_num(&v).map_err(at)?,
                ("kernels", "exponents") => c.kernels = parse_list(&v).map_err(at)?,
                ("suite", "seed") => c.seed = parse_num(&v).map_err(at)?,
                ("suite", "size") => c.suite_size = parse_num(&v).map_err(at)?,
                ("tolerances", "identity") => c.tolerances.identity = parse_num(&v).map_err(at)?,
                ("tolerances", "spread") => c.tolerances.spread = parse_num(&v).map_err(at)?,
                ("tolerances", "variation") => c.tolerances.variation = parse_num(&v).map_err(at)?,
                ("tolerances", "exponent") => c.tolerances.exponent = parse_num(&v).map_err(at)?,
                _ => return Err(Error::Config(format!("line {no}: unknown key `{k}` in [{s}]"))),
            }
        }
        if !weight_keys.is_empty() {
            c.weight = parse_weight(&weight_keys, c.grid.n)?;
        }
        if !matrix_keys.is_empty() {
            matrix_keys.sort_by_key(|m| m.0);
            if matrix_keys.iter().enumerate().any(|(i, m)| m.0 != i + 1) {
                return Err(Error::Config("matrices must be numbered a1, a2, … without gaps".into()));
            }
            c.matrices = matrix_keys
                .iter()
                .map(|(_, v)| parse_matrix(c.grid.n, v))
                .collect::<Result<_>>()?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<std::path::Path>, fallback: Option<Scenario>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, fallback)
    }

    pub fn exponents(&self) -> Result<ExponentSet> {
        let e = match self.q {
            None => ExponentSet::sobolev(self.grid.n, self.alpha, self.p)?,
            Some(q) => ExponentSet::new(self.grid.n, self.alpha, self.p, q)?,
        };
        e.with_s(self.s)
    }

    /// Cross-field checks; scenario-specific preconditions are checked by the scenario.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n;
        self.grid.grid()?;
        self.grid.trace_grids()?;
        if self.grid.levels.is_empty() {
            return Err(Error::Config("[grid] levels must not be empty".into()));
        }
        if self.matrices.is_empty() {
            return Err(Error::Config("at least one matrix is required".into()));
        }
        if let Some(a) = self.matrices.iter().find(|a| a.dim() != n) {
            return Err(Error::Config(format!("matrix of dimension {} on an n = {n} grid", a.dim())));
        }
        self.exponents().map_err(|e| Error::Config(e.to_string()))?;
        if !self.kernels.is_empty() {
            if self.kernels.len() != self.matrices.len() {
                return Err(Error::Config(format!(
                    "{} kernel exponents for {} matrices",
                    self.kernels.len(),
                    self.matrices.len()
                )));
            }
            let total: f64 = self.kernels.iter().sum();
            if (total - (n as f64 - self.alpha)).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "kernel exponents sum to {total}, expected n - alpha = {}",
                    n as f64 - self.alpha
                )));
            }
        }
        if self.suite_size == 0 {
            return Err(Error::Config("[suite] size must be positive".into()));
        }
        Ok(())
    }
}

const SECTIONS: [&str; 7] = ["grid", "weight", "matrices", "exponents", "kernels", "suite", "tolerances"];

fn parse_num<T: FromStr>(v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Parse(format!("cannot read `{v}`")))
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>> {
    v.split(',').map(parse_num).collect()
}

fn parse_fraction(v: &str) -> Result<(i64, i64)> {
    match v.split_once('/') {
        Some((a, b)) => Ok((parse_num(a)?, parse_num(b)?)),
        None => Ok((parse_num(v)?, 1)),
    }
}

/// Rows separated by `;`, entries by `,`, each entry an integer or `a/b`.
pub fn parse_matrix(n: usize, v: &str) -> Result<LinearMap> {
    let entries: Vec<(i64, i64)> = v
        .split(';')
        .flat_map(|row| row.split(','))
        .map(parse_fraction)
        .collect::<Result<_>>()?;
    if entries.len() != n * n {
        return Err(Error::Config(format!("matrix `{v}` has {} entries, expected {}", entries.len(), n * n)));
    }
    LinearMap::from_pairs(n, &entries)
}

fn parse_weight(keys: &[(String, String)], n: usize) -> Result<WeightRecipe> {
    let get = |k: &str| keys.iter().find(|e| e.0 == k).map(|e| e.1.as_str());
    let need = |k: &str| get(k).ok_or_else(|| Error::Config(format!("[weight] needs `{k}`")));
    let recipe = get("recipe").unwrap_or("power");
    let allowed: &[&str] = match recipe {
        "constant" => &["recipe", "value"],
        "power" => &["recipe", "beta"],
        "floored-power" => &["recipe", "beta", "floor"],
        "product" => &["recipe", "betas"],
        "exponential" => &["recipe", "rate"],
        "piecewise" => &["recipe", "radii", "values"],
        other => return Err(Error::Config(format!("unknown weight recipe `{other}`"))),
    };
    if let Some((k, _)) = keys.iter().find(|e| !allowed.contains(&e.0.as_str())) {
        return Err(Error::Config(format!("key `{k}` does not apply to a {recipe} weight")));
    }
    Ok(match recipe {
        "constant" => WeightRecipe::Constant(parse_num(need("value")?)?),
        "power" => WeightRecipe::power(parse_num(need("beta")?)?),
        "floored-power" => WeightRecipe::FlooredPower {
            beta: parse_num(need("beta")?)?,
            floor: parse_num(need("floor")?)?,
        },
        "product" => {
            let betas: Vec<f64> = parse_list(need("betas")?)?;
            if betas.len() != n {
                return Err(Error::Config(format!("product weight needs {n} exponents")));
            }
            WeightRecipe::AxisProduct { betas }
        }
        "exponential" => WeightRecipe::Exponential {
            rate: parse_num(need("rate")?)?,
        },
        _ => WeightRecipe::Piecewise {
            radii: parse_list(need("radii")?)?,
            values: parse_list(need("values")?)?,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for s in Scenario::ALL {
            ExperimentConfig::preset(s).validate().unwrap();
            assert_eq!(s.id().parse::<Scenario>().unwrap(), s);
        }
    }

    #[test]
    fn parse_overrides_the_preset() {
        let text = "scenario = weak-type\n[grid]\nl = 6 # finer\nlevels = 4,5,6\n[weight]\nrecipe = power\nbeta = 0.3\n[matrices]\na1 = -1\n[suite]\nseed = 9\n";
        let c = ExperimentConfig::parse(text, None).unwrap();
        assert_eq!(c.scenario, Scenario::WeakType);
        assert_eq!(c.grid.l, 6);
        assert_eq!(c.weight, WeightRecipe::power(0.3));
        assert_eq!(c.seed, 9);
        assert_eq!(c.matrices.len(), 1);
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        assert!(ExperimentConfig::parse("[grid]\nwidth = 3\n", Some(Scenario::Sawyer)).is_err());
        assert!(ExperimentConfig::parse("[plot]\n", Some(Scenario::Sawyer)).is_err());
        assert!(ExperimentConfig::parse("colour = red\n", Some(Scenario::Sawyer)).is_err());
        assert!(ExperimentConfig::parse("[weight]\nrecipe = power\nrate = 1\n", Some(Scenario::Sawyer)).is_err());
        assert!(ExperimentConfig::parse("[grid]\nn = 1\n", None).is_err());
    }

    #[test]
    fn kernel_exponents_must_match_alpha() {
        let text = "[exponents]\nalpha = 0.25\n[kernels]\nexponents = 0.5, 0.5\n";
        assert!(ExperimentConfig::parse(text, Some(Scenario::Ejem)).is_err());
    }

    #[test]
    fn matrices_parse_rationals() {
        let a = parse_matrix(2, "0, 2; -1/2, 0").unwrap();
        assert_eq!(a.det_f64(), 1.0);
        assert!(parse_matrix(2, "1,0,0").is_err());
    }
}
