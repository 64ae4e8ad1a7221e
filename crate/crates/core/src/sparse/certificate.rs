use std::fmt::Write as _;

use super::cz::{audit_cz, cz_decompose};
use super::exceptional::{ExceptionalProfile, SparseBuildParams};
use super::{sparse_apply, verify_sparsity, SparseCube, SparseFamily, SparsityAudit};
use crate::error::{Error, Result};
use crate::geometry::{make_shifted_lattices, DyadicLattice};
use crate::grid::{CellBox, CellMask, Grid, GridFunction};
use crate::operators::{KernelEvaluator, OperatorSpec};

/// Counters of the recursion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecursionStats {
    pub roots: usize,
    pub nodes: usize,
    /// Nodes that stopped at cell scale or at the depth cap.
    pub leaves: usize,
    pub depth_capped: usize,
    pub max_depth: usize,
    pub min_gamma: f64,
    pub max_gamma: f64,
}

/// Packing and selection audits over every decomposed cube, in cell counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CzSummary {
    pub runs: usize,
    /// Runs violating `|E ∩ P| ≤ |P|/2^{n+2}`.
    pub packing_failures: usize,
    /// Runs violating `Σ|P_j| ≤ 2^{n+1}|E|` or leaving mask cells uncovered.
    pub selection_failures: usize,
    /// `max |E ∩ P| 2^{n+2} / |P|` (≤ 1 when packed).
    pub worst_packing: f64,
    /// `max Σ|P_j| / (2^{n+1}|E|)` (≤ 1 when the selection bound holds).
    pub worst_selection: f64,
}

impl CzSummary {
    pub fn passed(&self) -> bool {
        self.packing_failures == 0 && self.selection_failures == 0
    }
}

/// Families, audits and the measured pointwise constant of one run.
#[derive(Debug, Clone)]
pub struct DominationCertificate {
    pub grid: Grid,
    pub alpha: f64,
    pub s: f64,
    pub maps: usize,
    pub roots: Vec<CellBox>,
    /// The stopping cubes before redistribution, on the standard lattice.
    pub stopping: SparseFamily,
    /// `S_j`, one per shifted lattice.
    pub families: Vec<SparseFamily>,
    /// `max |Tf| / Σ_j Σ_i A_{α,s,S_j} f(A_i^{-1}·)`; `None` when `f ≡ 0`.
    pub constant: Option<f64>,
    pub stopping_audit: SparsityAudit,
    pub family_audits: Vec<SparsityAudit>,
    pub cz: CzSummary,
    pub stats: RecursionStats,
}

impl DominationCertificate {
    /// Target sparseness of the redistributed families.
    pub fn redistributed_eta(n: usize) -> f64 {
        1.0 / (2.0 * 9f64.powi(n as i32))
    }

    pub fn is_certified(&self) -> bool {
        self.constant.is_some_and(f64::is_finite)
            && self.stopping_audit.passed
            && self.family_audits.iter().all(|a| a.passed)
            && self.cz.passed()
    }

    /// The construction follows the written argument only for two maps.
    pub fn is_extrapolated(&self) -> bool {
        self.maps > 2
    }

    /// Smallest witness ratio over the redistributed families.
    pub fn redistributed_min_ratio(&self) -> f64 {
        self.family_audits.iter().map(|a| a.min_ratio).fold(1.0, f64::min)
    }
}

/// `Σ_j Σ_i A_{α,s,S_j} f(A_i^{-1}x)`.
pub fn sparse_bound(
    families: &[SparseFamily],
    spec: &OperatorSpec,
    f: &GridFunction,
    s: f64,
) -> Result<GridFunction> {
    let mut total = GridFunction::zeros(f.grid());
    for fam in families {
        for a in &spec.maps {
            total = total.add(&sparse_apply(fam, f, spec.alpha, s, a)?)?;
        }
    }
    Ok(total)
}

/// `max |Tf| / bound` over cells; infinite if the bound vanishes where `Tf` does not.
pub fn pointwise_constant(tf: &GridFunction, bound: &GridFunction) -> f64 {
    tf.values()
        .iter()
        .zip(bound.values())
        .map(|(&t, &b)| {
            if t == 0.0 {
                0.0
            } else if b > 0.0 {
                t.abs() / b
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Smallest dyadic cube holding the support, plus the siblings of its
/// ancestors: disjoint dyadic roots tiling the box, each with `supp f ⊂ 3P`.
pub fn covering_roots(grid: &Grid, support: &CellMask) -> Vec<CellBox> {
    let Some((lo, hi)) = support.bounding_box() else {
        return Vec::new();
    };
    let n = grid.dim();
    let mut side = 1;
    let q0 = loop {
        let mut base = [0usize; 2];
        for i in 0..n {
            base[i] = lo[i] / side * side;
        }
        let b = CellBox::new(n, base, side);
        if (0..n).all(|i| hi[i] < base[i] + side) {
            break b;
        }
        side *= 2;
    };
    let mut roots = vec![q0];
    let mut cur = q0;
    while cur.side < grid.cells_per_axis() {
        let side = cur.side * 2;
        let mut base = [0usize; 2];
        for i in 0..n {
            base[i] = cur.lo[i] / side * side;
        }
        let parent = CellBox::new(n, base, side);
        roots.extend(parent.children().expect("side ≥ 2").into_iter().filter(|c| *c != cur));
        cur = parent;
    }
    roots
}

struct Node {
    cube: CellBox,
    children: Vec<CellBox>,
}

fn process_root(
    ev: &KernelEvaluator,
    spec: &OperatorSpec,
    f: &GridFunction,
    root: CellBox,
    params: &SparseBuildParams,
    nodes: &mut Vec<Node>,
    cz: &mut CzSummary,
    stats: &mut RecursionStats,
) -> Result<()> {
    let grid = ev.grid();
    let n = grid.dim();
    let mut stack = vec![(root, 0usize)];
    while let Some((p, depth)) = stack.pop() {
        stats.nodes += 1;
        stats.max_depth = stats.max_depth.max(depth);
        if p.side == 1 || depth >= params.max_depth {
            stats.leaves += 1;
            if p.side > 1 {
                stats.depth_capped += 1;
            }
            nodes.push(Node {
                cube: p,
                children: Vec::new(),
            });
            continue;
        }
        let profile = ExceptionalProfile::compute(ev, spec, f, &p, params.s);
        let packing = |m: &CellMask| m.count_in(&p) * (1usize << (n + 2));
        let mut gamma = params.gamma;
        let mut mask = profile.mask(grid, gamma);
        let mut k = 0;
        while packing(&mask) > p.cell_count() {
            if k == params.max_doublings {
                return Err(Error::Construction(format!(
                    "no threshold multiplier up to {gamma} packs the exceptional set of {p:?}: \
                     {} of {} cells exceed {} (norm {:e})",
                    mask.count_in(&p),
                    p.cell_count(),
                    gamma * profile.scale,
                    profile.norm
                )));
            }
            gamma *= 2.0;
            k += 1;
            mask = profile.mask(grid, gamma);
        }
        stats.min_gamma = stats.min_gamma.min(gamma);
        stats.max_gamma = stats.max_gamma.max(gamma);
        let children = cz_decompose(&mask, &p, params.height)?;
        let audit = audit_cz(&mask, &p, params.height, &children);
        cz.runs += 1;
        let e = audit.mask_cells as f64;
        let pack = packing(&mask) as f64 / p.cell_count() as f64;
        cz.worst_packing = cz.worst_packing.max(pack);
        if pack > 1.0 {
            cz.packing_failures += 1;
        }
        let bound = 2f64.powi(n as i32 + 1) * e;
        if audit.selected_cells > 0 {
            cz.worst_selection = cz.worst_selection.max(audit.selected_cells as f64 / bound);
        }
        if audit.selected_cells as f64 > bound || !audit.passed(n) {
            cz.selection_failures += 1;
        }
        for c in children.iter().rev() {
            stack.push((*c, depth + 1));
        }
        nodes.push(Node { cube: p, children });
    }
    Ok(())
}

/// Tag of the shifted lattice holding `3Q`.
fn triple_tag(grid: &Grid, lattices: &[DyadicLattice], q: &SparseCube) -> Result<usize> {
    let t = q.triple().to_cube(grid);
    lattices
        .iter()
        .find(|l| l.contains_cube(&t))
        .map(|l| l.tag())
        .ok_or_else(|| Error::Construction(format!("no shifted lattice holds the triple of {q}")))
}

/// Builds the stopping families, redistributes their triples into the `3^n`
/// shifted lattices and measures the pointwise constant.
pub fn build_sparse_domination(
    spec: &OperatorSpec,
    f: &GridFunction,
    params: &SparseBuildParams,
) -> Result<DominationCertificate> {
    params.validate()?;
    let grid = f.grid();
    let n = grid.dim();
    let ev = KernelEvaluator::new(spec, grid, params.budget)?;
    let roots = covering_roots(&grid, &f.support());
    let mut nodes = Vec::new();
    let mut cz = CzSummary::default();
    let mut stats = RecursionStats {
        roots: roots.len(),
        min_gamma: f64::INFINITY,
        ..Default::default()
    };
    for r in &roots {
        process_root(&ev, spec, f, *r, params, &mut nodes, &mut cz, &mut stats)?;
    }
    if cz.runs == 0 {
        stats.min_gamma = 0.0;
    }
    nodes.sort_by_key(|nd| nd.cube);

    let cubes: Vec<SparseCube> = nodes.iter().map(|nd| SparseCube::from_box(&nd.cube)).collect();
    let witnesses: Vec<CellMask> = nodes
        .iter()
        .map(|nd| {
            let mut e = CellMask::from_box(grid, &nd.cube);
            for c in &nd.children {
                e.remove_box(c);
            }
            e
        })
        .collect();
    let stopping = SparseFamily::new(grid, None, cubes.clone(), 0.5)?.with_witnesses(witnesses.clone())?;
    let stopping_audit = verify_sparsity(&stopping, 0.5);

    let depth = grid.half_width_exp() + grid.level() + 1;
    let lattices = make_shifted_lattices(n, depth, &grid.box_cube())?;
    let eta = DominationCertificate::redistributed_eta(n);
    let mut split: Vec<(Vec<SparseCube>, Vec<CellMask>)> = vec![(Vec::new(), Vec::new()); lattices.len()];
    for (q, w) in cubes.iter().zip(witnesses) {
        let j = triple_tag(&grid, &lattices, q)?;
        split[j].0.push(q.triple());
        split[j].1.push(w);
    }
    let families = split
        .into_iter()
        .enumerate()
        .map(|(j, (c, w))| SparseFamily::new(grid, Some(j), c, eta)?.with_witnesses(w))
        .collect::<Result<Vec<_>>>()?;
    let family_audits = families.iter().map(|fam| verify_sparsity(fam, eta)).collect();

    let constant = if f.is_zero() {
        None
    } else {
        let tf = ev.apply(f)?;
        Some(pointwise_constant(&tf, &sparse_bound(&families, spec, f, params.s)?))
    };
    Ok(DominationCertificate {
        grid,
        alpha: spec.alpha,
        s: params.s,
        maps: spec.m(),
        roots,
        stopping,
        families,
        constant,
        stopping_audit,
        family_audits,
        cz,
        stats,
    })
}

fn mask_runs(m: &CellMask) -> String {
    let mut out = String::new();
    let bits = m.bits();
    let mut i = 0;
    while i < bits.len() {
        if bits[i] {
            let start = i;
            while i < bits.len() && bits[i] {
                i += 1;
            }
            if !out.is_empty() {
                out.push(',');
            }
            let _ = write!(out, "{start}-{}", i - 1);
        } else {
            i += 1;
        }
    }
    out
}

fn parse_runs(grid: Grid, s: &str) -> Result<CellMask> {
    let mut m = CellMask::empty(grid);
    for run in s.split(',').filter(|t| !t.is_empty()) {
        let (a, b) = run
            .split_once('-')
            .ok_or_else(|| Error::Parse(format!("witness run `{run}`")))?;
        let (a, b): (usize, usize) = (
            a.parse().map_err(|_| Error::Parse(format!("witness run `{run}`")))?,
            b.parse().map_err(|_| Error::Parse(format!("witness run `{run}`")))?,
        );
        if a > b || b >= grid.len() {
            return Err(Error::Parse(format!("witness run `{run}` outside the grid")));
        }
        for i in a..=b {
            m.set(i, true);
        }
    }
    Ok(m)
}

fn write_family(out: &mut String, fam: &SparseFamily) {
    let tag = fam.tag().map_or("-".to_string(), |t| t.to_string());
    let _ = writeln!(out, "family tag={tag} eta={} cubes={}", fam.eta(), fam.len());
    let ws = fam.witnesses();
    for (k, q) in fam.cubes().iter().enumerate() {
        let w = ws.map_or(String::new(), |w| mask_runs(&w[k]));
        let _ = writeln!(out, "cube {q} witness={w}");
    }
}

/// Families and numbers parsed back from a certificate file.
#[derive(Debug, Clone)]
pub struct StoredCertificate {
    pub grid: Grid,
    pub alpha: f64,
    pub s: f64,
    pub constant: Option<f64>,
    pub stopping: SparseFamily,
    pub families: Vec<SparseFamily>,
}

impl StoredCertificate {
    /// Recomputes the pointwise constant from the stored families.
    pub fn recheck(&self, spec: &OperatorSpec, f: &GridFunction, params: &SparseBuildParams) -> Result<Option<f64>> {
        if f.is_zero() {
            return Ok(None);
        }
        let tf = KernelEvaluator::new(spec, f.grid(), params.budget)?.apply(f)?;
        Ok(Some(pointwise_constant(&tf, &sparse_bound(&self.families, spec, f, self.s)?)))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut grid = None;
        let mut alpha = None;
        let mut s = None;
        let mut constant = None;
        let mut fams: Vec<(Option<usize>, f64, Vec<SparseCube>, Vec<String>)> = Vec::new();
        let field = |line: &str, key: &str| -> Result<String> {
            line.split_whitespace()
                .find_map(|t| t.strip_prefix(&format!("{key}=")).map(str::to_string))
                .ok_or_else(|| Error::Parse(format!("missing `{key}` in `{line}`")))
        };
        let num = |v: String| -> Result<f64> { v.parse().map_err(|_| Error::Parse(format!("number `{v}`"))) };
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let head = line.split_whitespace().next().unwrap_or("");
            match head {
                "grid" => {
                    let p = |k: &str| -> Result<i32> {
                        field(line, k)?.parse().map_err(|_| Error::Parse(format!("grid field `{k}`")))
                    };
                    grid = Some(Grid::new(p("n")? as usize, p("J")?, p("L")?)?);
                }
                "operator" => {
                    alpha = Some(num(field(line, "alpha")?)?);
                    s = Some(num(field(line, "s")?)?);
                }
                "constant" => {
                    let v = field(line, "c")?;
                    constant = if v == "undefined" { None } else { Some(num(v)?) };
                }
                "family" => {
                    let tag = field(line, "tag")?;
                    let tag = if tag == "-" {
                        None
                    } else {
                        Some(tag.parse().map_err(|_| Error::Parse(format!("tag `{tag}`")))?)
                    };
                    fams.push((tag, num(field(line, "eta")?)?, Vec::new(), Vec::new()));
                }
                "cube" => {
                    let last = fams.last_mut().ok_or_else(|| Error::Parse("cube before family".into()))?;
                    let q = line.split_whitespace().nth(1).ok_or_else(|| Error::Parse(line.into()))?;
                    last.2.push(q.parse()?);
                    last.3.push(field(line, "witness")?);
                }
                "stats" | "audit" | "cz" | "roots" => {}
                other => return Err(Error::Parse(format!("unknown certificate line `{other}`"))),
            }
        }
        let grid = grid.ok_or_else(|| Error::Parse("missing grid line".into()))?;
        let mut built = fams
            .into_iter()
            .map(|(tag, eta, cubes, ws)| {
                let ws = ws.iter().map(|w| parse_runs(grid, w)).collect::<Result<Vec<_>>>()?;
                SparseFamily::new(grid, tag, cubes, eta)?.with_witnesses(ws)
            })
            .collect::<Result<Vec<_>>>()?;
        if built.is_empty() || built[0].tag().is_some() {
            return Err(Error::Parse("the stopping family must come first".into()));
        }
        let stopping = built.remove(0);
        Ok(StoredCertificate {
            grid,
            alpha: alpha.ok_or_else(|| Error::Parse("missing operator line".into()))?,
            s: s.unwrap_or(1.0),
            constant,
            stopping,
            families: built,
        })
    }
}

impl DominationCertificate {
    /// Plain-text form holding everything needed to re-verify the bound.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut out = String::from("# sparse domination certificate\n");
        let _ = writeln!(out, "grid n={} J={} L={}", g.dim(), g.half_width_exp(), g.level());
        let _ = writeln!(out, "operator alpha={} s={} maps={}", self.alpha, self.s, self.maps);
        let c = self.constant.map_or("undefined".to_string(), |c| c.to_string());
        let _ = writeln!(out, "constant c={c}");
        let st = &self.stats;
        let _ = writeln!(
            out,
            "stats roots={} nodes={} leaves={} depth_capped={} max_depth={} gamma_min={} gamma_max={}",
            st.roots, st.nodes, st.leaves, st.depth_capped, st.max_depth, st.min_gamma, st.max_gamma
        );
        let _ = writeln!(
            out,
            "cz runs={} packing_failures={} selection_failures={} worst_packing={} worst_selection={}",
            self.cz.runs, self.cz.packing_failures, self.cz.selection_failures, self.cz.worst_packing, self.cz.worst_selection
        );
        let _ = writeln!(
            out,
            "audit stopping_min_ratio={} stopping_passed={} redistributed_min_ratio={} redistributed_passed={}",
            self.stopping_audit.min_ratio,
            self.stopping_audit.passed,
            self.redistributed_min_ratio(),
            self.family_audits.iter().all(|a| a.passed)
        );
        write_family(&mut out, &self.stopping);
        for fam in &self.families {
            write_family(&mut out, fam);
        }
        out
    }
}
