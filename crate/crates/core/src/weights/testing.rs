use super::exponents::{conjugate, ExponentSet};
use super::muckenhoupt::twisted_power;
use super::report::WeightConstantReport;
use crate::error::{Error, Result};
use crate::geometry::LinearMap;
use crate::operators::fractional_maximal;
use crate::grid::{lp_norm, BoxSums, CellBox, CubeFamily, Grid, GridFunction, LatticeTree, Weight};

fn finite_sums(w: &Weight, what: &str) -> Result<BoxSums> {
    if w.has_infinite() {
        return Err(Error::InvalidArgument(format!("{what} has infinite cells")));
    }
    Ok(BoxSums::new(w.grid(), w.values()))
}

fn same_grid(a: Grid, b: Grid) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument("inputs live on different grids".into()));
    }
    Ok(())
}

/// Evaluates `M_α(χ_Q v)` for cubes `Q` of a family, with `M_α` over the same family.
struct IndicatorProbe {
    grid: Grid,
    boxes: Vec<CellBox>,
    v: BoxSums,
    power: f64,
}

impl IndicatorProbe {
    fn new(v: &Weight, alpha: f64, family: &CubeFamily) -> Result<Self> {
        let mut boxes = Vec::with_capacity(family.len());
        family.for_each(|b| boxes.push(b));
        if boxes.is_empty() {
            return Err(Error::EmptyFamily);
        }
        Ok(IndicatorProbe {
            grid: v.grid(),
            boxes,
            v: finite_sums(v, "v")?,
            power: alpha / v.grid().dim() as f64 - 1.0,
        })
    }

    fn mass(&self, b: &CellBox) -> f64 {
        self.v.sum(b).max(0.0) * self.grid.cell_volume()
    }

    /// `M_α(χ_Q v)` on every cell.
    fn maximal(&self, q: &CellBox) -> Vec<f64> {
        let mut out = vec![0.0f64; self.grid.len()];
        let vol = self.grid.cell_volume();
        for p in &self.boxes {
            let Some((lo, hi)) = p.overlap(q) else { continue };
            let m = self.v.rect_sum(lo, hi).max(0.0) * vol;
            if m <= 0.0 {
                continue;
            }
            let val = self.grid.box_volume(p).powf(self.power) * m;
            self.grid.for_each_cell(p, |i| {
                if val > out[i] {
                    out[i] = val;
                }
            });
        }
        out
    }

    /// `(∫_Q M^q u, ∫ M^q u)`; the second integral adds the outside part to the first.
    fn integrals(&self, q: &CellBox, u: &[f64], qexp: f64) -> (f64, f64) {
        let m = self.maximal(q);
        let vol = self.grid.cell_volume();
        let mut inside = 0.0;
        self.grid.for_each_cell(q, |i| {
            if m[i] > 0.0 {
                inside += m[i].powf(qexp) * u[i];
            }
        });
        let mut outside = 0.0;
        for (i, &mv) in m.iter().enumerate() {
            if mv > 0.0 && !q.contains_coords(&self.grid.coords(i)[..self.grid.dim()]) {
                outside += mv.powf(qexp) * u[i];
            }
        }
        (inside * vol, (inside + outside) * vol)
    }
}

/// `sup_Q v(Q)^{-1/p} (∫_Q M_α(χ_Q v)^q u)^{1/q}` over a family.
pub fn sawyer_testing_constant(
    u: &Weight,
    v: &Weight,
    e: &ExponentSet,
    family: &CubeFamily,
) -> Result<WeightConstantReport> {
    Ok(sawyer_pair(u, v, e, family)?.0)
}

/// The testing constant together with the strong quotient of `g ↦ M_α(g v)` restricted
/// to the indicators `g = χ_Q` of the family.
fn sawyer_pair(
    u: &Weight,
    v: &Weight,
    e: &ExponentSet,
    family: &CubeFamily,
) -> Result<(WeightConstantReport, WeightConstantReport)> {
    same_grid(u.grid(), v.grid())?;
    same_grid(u.grid(), family.grid())?;
    if u.has_infinite() {
        return Err(Error::InvalidArgument("u has infinite cells".into()));
    }
    let probe = IndicatorProbe::new(v, e.alpha(), family)?;
    let mut testing = WeightConstantReport::new("sawyer-testing", family.label(), u.grid());
    let mut strong = WeightConstantReport::new("sawyer-strong-indicators", family.label(), u.grid());
    for q in &probe.boxes {
        let vq = probe.mass(q);
        if !(vq > 0.0) {
            testing.offer(*q, None);
            strong.offer(*q, None);
            continue;
        }
        let (inside, full) = probe.integrals(q, u.values(), e.q());
        let norm = vq.powf(-1.0 / e.p());
        testing.offer(*q, Some(norm * inside.powf(1.0 / e.q())));
        strong.offer(*q, Some(norm * full.powf(1.0 / e.q())));
    }
    Ok((testing, strong))
}

/// `[w]` of the matrix testing class: the testing constant of `(w_A^q, w^{-p'})`.
pub fn matrix_sawyer_constant(
    w: &Weight,
    a: &LinearMap,
    e: &ExponentSet,
    family: &CubeFamily,
) -> Result<WeightConstantReport> {
    if e.p() == 1.0 {
        return Err(Error::InvalidArgument("the testing class needs p > 1".into()));
    }
    let u = twisted_power(w, a, e.q())?;
    let v = w.pow(-e.p_conj());
    let mut r = sawyer_testing_constant(&u, &v, e, family)?;
    r.check = "matrix-sawyer".into();
    Ok(r)
}

/// Measured norm of `g ↦ M_α(g v)` from `L^p(v)` to `L^q(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongQuotient {
    pub value: f64,
    /// Best indicator of the family, if it realizes the sup.
    pub from_indicator: Option<CellBox>,
    pub tests: usize,
}

/// Sup of `‖M_α(g v)‖_{L^q(u)} / ‖g‖_{L^p(v)}` over every family indicator and the
/// extra test functions.
pub fn maximal_strong_quotient(
    u: &Weight,
    v: &Weight,
    e: &ExponentSet,
    family: &CubeFamily,
    extra: &[GridFunction],
) -> Result<StrongQuotient> {
    let (_, ind) = sawyer_pair(u, v, e, family)?;
    let mut best = StrongQuotient {
        value: ind.value,
        from_indicator: ind.argsup,
        tests: ind.evaluated,
    };
    for g in extra {
        same_grid(g.grid(), u.grid())?;
        let den = lp_norm(g, v, e.p())?;
        if !(den > 0.0) {
            continue;
        }
        let gv = GridFunction::from_values(
            g.grid(),
            g.values().iter().zip(v.values()).map(|(a, b)| a.abs() * b).collect(),
        )?;
        let m = fractional_maximal(&gv, e.alpha(), 1.0, family)?;
        let num = lp_norm(&m, u, e.q())?;
        best.tests += 1;
        if num / den > best.value {
            best.value = num / den;
            best.from_indicator = None;
        }
    }
    Ok(best)
}

/// A family of dyadic-type cubes in which any two cubes are nested or disjoint.
#[derive(Debug, Clone)]
pub struct NestedFamily {
    grid: Grid,
    boxes: Vec<CellBox>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl NestedFamily {
    pub fn from_tree(tree: &LatticeTree) -> Self {
        let boxes = tree.nodes().to_vec();
        let parent = (0..boxes.len()).map(|i| tree.parent(i)).collect();
        let children = (0..boxes.len()).map(|i| tree.children(i).to_vec()).collect();
        NestedFamily {
            grid: tree.grid(),
            boxes,
            parent,
            children,
        }
    }

    /// Builds parent links; fails if two cubes overlap without nesting.
    pub fn from_boxes(grid: Grid, mut boxes: Vec<CellBox>) -> Result<Self> {
        boxes.sort_by(|a, b| b.side.cmp(&a.side).then(a.lo.cmp(&b.lo)));
        boxes.dedup();
        let k = boxes.len();
        let mut parent: Vec<Option<usize>> = vec![None; k];
        for i in 0..k {
            for j in (0..i).rev() {
                if boxes[j].intersects(&boxes[i]) {
                    if !boxes[j].contains(&boxes[i]) {
                        return Err(Error::InvalidArgument(format!(
                            "cubes {:?} and {:?} overlap without nesting",
                            boxes[j], boxes[i]
                        )));
                    }
                    if parent[i].is_none() || boxes[j].side < boxes[parent[i].unwrap()].side {
                        parent[i] = Some(j);
                    }
                }
            }
        }
        let mut children = vec![Vec::new(); k];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        Ok(NestedFamily {
            grid,
            boxes,
            parent,
            children,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn boxes(&self) -> &[CellBox] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// `i` and its ancestors, innermost first.
    pub fn chain(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut cur = i;
        while let Some(p) = self.parent[cur] {
            out.push(p);
            cur = p;
        }
        out
    }

    /// `i` and everything below it.
    pub fn subtree(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut k = 0;
        while k < out.len() {
            out.extend_from_slice(&self.children[out[k]]);
            k += 1;
        }
        out
    }
}

/// `(∫ (Σ_k c_k χ_{Q_k})^s ω)^{1/s}` for a chain `Q_0 ⊂ Q_1 ⊂ …`.
fn chain_norm(grid: Grid, chain: &[(CellBox, f64)], omega: &BoxSums, s: f64) -> f64 {
    let vol = grid.cell_volume();
    let mut tail: f64 = chain.iter().map(|c| c.1).sum();
    let mut inner_mass = 0.0;
    let mut total = 0.0;
    for (b, c) in chain {
        let mass = omega.sum(b).max(0.0) * vol;
        let ring = (mass - inner_mass).max(0.0);
        if tail > 0.0 && ring > 0.0 {
            total += tail.powf(s) * ring;
        }
        inner_mass = mass;
        tail -= c;
        if tail < 0.0 {
            tail = 0.0;
        }
    }
    total.powf(1.0 / s)
}

/// `(∫ (Σ_Q c_Q χ_Q)^s ω)^{1/s}` for arbitrary cubes inside `root`.
fn subtree_norm(grid: Grid, root: &CellBox, terms: &[(CellBox, f64)], omega: &[f64], s: f64) -> f64 {
    let mut acc = vec![0.0f64; grid.len()];
    for (b, c) in terms {
        if *c != 0.0 {
            grid.for_each_cell(b, |i| acc[i] += c);
        }
    }
    let mut total = 0.0;
    grid.for_each_cell(root, |i| {
        if acc[i] > 0.0 {
            total += acc[i].powf(s) * omega[i];
        }
    });
    (total * grid.cell_volume()).powf(1.0 / s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestingSide {
    /// Sum over the cubes containing the root.
    Out,
    /// Sum over the cubes inside the root.
    In,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestingForm {
    Plain,
    Dual,
}

/// The four dyadic testing suprema over a nested family, with `u_A` passed pre-twisted.
pub fn dyadic_testing_constants(
    ua: &Weight,
    v: &Weight,
    e: &ExponentSet,
    r: f64,
    family: &NestedFamily,
    side: TestingSide,
    form: TestingForm,
) -> Result<WeightConstantReport> {
    let grid = family.grid();
    same_grid(ua.grid(), grid)?;
    same_grid(v.grid(), grid)?;
    let n = grid.dim() as f64;
    let alpha = e.alpha();
    if !(r >= 1.0) || (alpha > 0.0 && r >= n / alpha) {
        return Err(Error::InvalidArgument(format!("r = {r} must lie in [1, n/alpha)")));
    }
    if e.p() == 1.0 {
        return Err(Error::InvalidArgument("dyadic testing constants need p > 1".into()));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let us = finite_sums(ua, "u_A")?;
    let vs = finite_sums(v, "v")?;
    let vol = grid.cell_volume();
    let mass = |s: &BoxSums, b: &CellBox| s.sum(b).max(0.0) * vol;
    let size = |b: &CellBox| grid.box_volume(b).powf(alpha / n - 1.0 / r);
    let check = format!(
        "testing-{}-{}",
        if side == TestingSide::Out { "out" } else { "in" },
        if form == TestingForm::Plain { "plain" } else { "dual" }
    );
    let mut report = WeightConstantReport::new(&check, "nested".into(), grid);
    let (qexp, pc) = (e.q(), e.p_conj());
    for (ri, root) in family.boxes().iter().enumerate() {
        let vr = mass(&vs, root);
        let ur = mass(&us, root);
        let members = match side {
            TestingSide::Out => family.chain(ri),
            TestingSide::In => family.subtree(ri),
        };
        let terms: Vec<(CellBox, f64)> = members
            .iter()
            .map(|&k| {
                let b = family.boxes()[k];
                let c = match (side, form) {
                    (TestingSide::Out, TestingForm::Plain) => size(&b) * vr.powf(1.0 / r),
                    (TestingSide::In, TestingForm::Plain) => size(&b) * mass(&vs, &b).powf(1.0 / r),
                    (_, TestingForm::Dual) => {
                        let vq = mass(&vs, &b);
                        let uq = if side == TestingSide::Out { ur } else { mass(&us, &b) };
                        if vq > 0.0 {
                            size(&b) * vq.powf(1.0 / r - 1.0) * uq
                        } else {
                            0.0
                        }
                    }
                };
                (b, c)
            })
            .collect();
        let val = match form {
            TestingForm::Plain => {
                if !(vr > 0.0) {
                    None
                } else {
                    let norm = match side {
                        TestingSide::Out => chain_norm(grid, &terms, &us, qexp),
                        TestingSide::In => subtree_norm(grid, root, &terms, ua.values(), qexp),
                    };
                    Some(vr.powf(-1.0 / e.p()) * norm)
                }
            }
            TestingForm::Dual => {
                if !(ur > 0.0) {
                    None
                } else {
                    let norm = match side {
                        TestingSide::Out => chain_norm(grid, &terms, &vs, pc),
                        TestingSide::In => subtree_norm(grid, root, &terms, v.values(), pc),
                    };
                    Some(ur.powf(-1.0 / e.q_conj()) * norm)
                }
            }
        };
        report.offer(*root, val);
    }
    Ok(report)
}

/// Tilde testing constants `(T̃_{t,out}, T̃*_{t,out})` over a sparse family.
pub fn tilde_testing_constants(
    u: &Weight,
    v: &Weight,
    t: f64,
    beta: f64,
    family: &NestedFamily,
    e: &ExponentSet,
) -> Result<(WeightConstantReport, WeightConstantReport)> {
    let grid = family.grid();
    same_grid(u.grid(), grid)?;
    same_grid(v.grid(), grid)?;
    if !(t > 0.0 && t < e.p()) {
        return Err(Error::InvalidArgument(format!("t = {t} must lie in (0, p)")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must lie in (0, 1]")));
    }
    if e.p() == 1.0 {
        return Err(Error::InvalidArgument("tilde testing constants need p > 1".into()));
    }
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let us = finite_sums(u, "u")?;
    let vs = finite_sums(v, "v")?;
    let vol = grid.cell_volume();
    let mass = |s: &BoxSums, b: &CellBox| s.sum(b).max(0.0) * vol;
    let mut plain = WeightConstantReport::new("tilde-out-plain", "sparse".into(), grid);
    let mut dual = WeightConstantReport::new("tilde-out-dual", "sparse".into(), grid);
    let (p, q) = (e.p(), e.q());
    for (ri, root) in family.boxes().iter().enumerate() {
        let chain = family.chain(ri);
        let vr = mass(&vs, root);
        let ur = mass(&us, root);
        let scale = |b: &CellBox| grid.box_volume(b).powf(-beta * t);
        if vr > 0.0 {
            let terms: Vec<(CellBox, f64)> = chain
                .iter()
                .map(|&k| {
                    let b = family.boxes()[k];
                    (b, scale(&b) * vr.powf(t))
                })
                .collect();
            plain.offer(*root, Some(vr.powf(-t / p) * chain_norm(grid, &terms, &us, q / t)));
        } else {
            plain.offer(*root, None);
        }
        if ur > 0.0 {
            let terms: Vec<(CellBox, f64)> = chain
                .iter()
                .map(|&k| {
                    let b = family.boxes()[k];
                    let vq = mass(&vs, &b);
                    let c = if vq > 0.0 { scale(&b) * vq.powf(t - 1.0) * ur } else { 0.0 };
                    (b, c)
                })
                .collect();
            let norm = chain_norm(grid, &terms, &vs, conjugate(p / t));
            dual.offer(*root, Some(ur.powf(-1.0 / conjugate(q / t)) * norm));
        } else {
            dual.offer(*root, None);
        }
    }
    Ok((plain, dual))
}

/// `σ = v^{p'/(s (p/s)')}`, so that `v = w^{-s (p/s)'}` gives `σ = w^{-p'}`.
pub fn conjugate_sigma(v: &Weight, e: &ExponentSet) -> Result<Weight> {
    if !(e.p() > e.s()) {
        return Err(Error::InvalidArgument(format!("need p > s, got p = {}, s = {}", e.p(), e.s())));
    }
    let exponent = e.p_conj() / (e.s() * conjugate(e.p() / e.s()));
    Ok(v.pow(exponent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightRecipe;
    use approx::assert_relative_eq;

    fn ones(g: Grid) -> Weight {
        Weight::constant(g, 1.0).unwrap()
    }

    #[test]
    fn sawyer_of_constant_weights_is_one() {
        let g = Grid::new(1, 1, 2).unwrap();
        let fam = CubeFamily::lattice_union(g);
        let e = ExponentSet::new(1, 0.0, 2.0, 2.0).unwrap();
        let r = sawyer_testing_constant(&ones(g), &ones(g), &e, &fam).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
        let es = ExponentSet::sobolev(1, 0.25, 2.0).unwrap();
        let r = matrix_sawyer_constant(&ones(g), &LinearMap::identity(1).unwrap(), &es, &fam).unwrap();
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_v_cube_is_skipped() {
        let g = Grid::new(1, 1, 1).unwrap();
        let mut vals = vec![1.0; g.len()];
        vals[0] = 0.0;
        let v = Weight::new(GridFunction::from_values(g, vals).unwrap()).unwrap();
        let fam = CubeFamily::reference(g);
        let e = ExponentSet::new(1, 0.0, 2.0, 2.0).unwrap();
        let r = sawyer_testing_constant(&ones(g), &v, &e, &fam).unwrap();
        assert_eq!(r.skipped, 1);
    }

    #[test]
    fn testing_never_exceeds_strong_quotient() {
        let g = Grid::new(1, 1, 2).unwrap();
        let w = WeightRecipe::power(0.3).build(g).unwrap();
        let e = ExponentSet::new(1, 0.0, 2.0, 2.0).unwrap();
        let u = w.pow(2.0);
        let v = w.pow(-2.0);
        let fam = CubeFamily::lattice_union(g);
        let t = sawyer_testing_constant(&u, &v, &e, &fam).unwrap();
        let s = maximal_strong_quotient(&u, &v, &e, &fam, &[]).unwrap();
        assert!(t.value <= s.value);
    }

    #[test]
    fn out_sum_is_geometric_for_constant_weights() {
        let g = Grid::new(1, 1, 2).unwrap();
        let tree = LatticeTree::new(g, None).unwrap();
        let fam = NestedFamily::from_tree(&tree);
        let e = ExponentSet::new(1, 0.0, 2.0, 2.0).unwrap();
        let r = dyadic_testing_constants(&ones(g), &ones(g), &e, 1.0, &fam, TestingSide::Out, TestingForm::Plain).unwrap();
        // Deepest roots have the longest chain; ring k carries S_k = sum_{j>=k} 2^{-j}.
        let levels = g.cells_per_axis().trailing_zeros() as i32 + 1;
        let s = |k: i32| (k..levels).map(|j| 0.5f64.powi(j)).sum::<f64>();
        let mut total = s(0).powi(2);
        for k in 1..levels {
            total += s(k).powi(2) * 2f64.powi(k - 1);
        }
        assert_relative_eq!(r.value, total.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn in_and_out_agree_on_a_single_cube() {
        let g = Grid::new(1, 1, 1).unwrap();
        let fam = NestedFamily::from_boxes(g, vec![CellBox::new(1, [2, 0], 4)]).unwrap();
        let w = WeightRecipe::power(0.5).build(g).unwrap();
        let e = ExponentSet::new(1, 0.0, 2.0, 3.0).unwrap();
        for form in [TestingForm::Plain, TestingForm::Dual] {
            let a = dyadic_testing_constants(&w, &ones(g), &e, 1.0, &fam, TestingSide::Out, form).unwrap();
            let b = dyadic_testing_constants(&w, &ones(g), &e, 1.0, &fam, TestingSide::In, form).unwrap();
            assert_relative_eq!(a.value, b.value, max_relative = 1e-12);
        }
    }

    #[test]
    fn nested_family_rejects_overlap() {
        let g = Grid::new(1, 1, 1).unwrap();
        let bad = vec![CellBox::new(1, [0, 0], 4), CellBox::new(1, [2, 0], 4)];
        assert!(NestedFamily::from_boxes(g, bad).is_err());
    }

    #[test]
    fn tilde_single_cube_closed_form() {
        let g = Grid::new(1, 1, 1).unwrap();
        let q = CellBox::new(1, [0, 0], 4);
        let fam = NestedFamily::from_boxes(g, vec![q]).unwrap();
        let e = ExponentSet::new(1, 0.0, 2.0, 3.0).unwrap();
        let (t, beta) = (0.5, 0.75);
        let (a, b) = tilde_testing_constants(&ones(g), &ones(g), t, beta, &fam, &e).unwrap();
        let side = g.box_volume(&q);
        let expected = side.powf(t * (1.0 - beta + 1.0 / 3.0 - 0.5));
        assert_relative_eq!(a.value, expected, max_relative = 1e-12);
        assert_relative_eq!(b.value, expected, max_relative = 1e-12);
    }

    #[test]
    fn sigma_identities() {
        let g = Grid::new(1, 1, 1).unwrap();
        let w = WeightRecipe::power(0.4).build(g).unwrap();
        let e = ExponentSet::new(1, 0.0, 3.0, 3.0).unwrap();
        assert_eq!(conjugate_sigma(&w, &e).unwrap(), w);
        let e2 = e.clone().with_s(2.0).unwrap();
        // v = w^{-s (p/s)'} gives sigma = w^{-p'}.
        let v = w.pow(-2.0 * conjugate(1.5));
        let sigma = conjugate_sigma(&v, &e2).unwrap();
        let target = w.pow(-1.5);
        for (a, b) in sigma.values().iter().zip(target.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        assert!(conjugate_sigma(&w, &e.with_s(3.0).unwrap()).is_err());
    }
}
