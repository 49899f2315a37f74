//! φ-epigraphs and geodesic φ-convex subsets of `M × ℝ`.
//!
//! A set is a predicate: a conjunction of constraints `expr ≤ level` or
//! `expr ≤ c`, evaluated at a base point and a level. A set `B` is geodesic
//! φ-convex when `(x, α), (y, β) ∈ B` implies `(γ(t), α + t·φ(β, α)) ∈ B`.
//! Membership is closed: a constraint holds when `expr − bound ≤ τ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bifunction::{probe_nondecreasing, Bifunction};
use crate::checker::{
    check_geodesic_phi_convex, CheckReport, FunctionOnManifold, SamplingPlan, Status, Violation,
};
use crate::checker::{Outcome, SweepRules};
use crate::error::Error;
use crate::expr::Expression;
use crate::manifold::{Geodesic, ManifoldSpec, Point, Region};

/// Name of the level variable available to constraint expressions.
pub const LEVEL_VAR: &str = "level";

/// Default width of the sampled level range above the active bound.
pub const DEFAULT_LEVEL_SPAN: f64 = 2.0;

/// A point `(x, α)` of `M × ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPoint {
    pub base: Point,
    pub level: f64,
}

/// `f(x) ≤ α + τ`.
pub fn epigraph_contains(f: &FunctionOnManifold, p: &ProductPoint, tol: f64) -> Result<bool, Error> {
    let coords = f.manifold().point(p.base.coords())?;
    Ok(f.eval(coords.coords())? <= p.level + tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    /// The level coordinate `α`.
    Level,
    Constant(f64),
}

/// `expr ≤ bound`, with `expr` over the coordinate names and `level`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    expr: Expression,
    bound: Bound,
    uses_level: bool,
}

impl Constraint {
    pub fn new(manifold: &ManifoldSpec, expr: &Expression, bound: Bound) -> Result<Self, Error> {
        let mut names = manifold.coordinate_names();
        names.push(LEVEL_VAR.to_string());
        let expr = expr
            .with_vars(&names)
            .map_err(|v| Error::invalid(format!("`{v}` is neither a coordinate nor `{LEVEL_VAR}`")))?;
        let uses_level = expr.used_vars().contains(&LEVEL_VAR);
        if uses_level && bound == Bound::Level {
            return Err(Error::invalid("a constraint bounded by the level cannot also use it"));
        }
        Ok(Constraint { expr, bound, uses_level })
    }

    pub fn parse(manifold: &ManifoldSpec, text: &str, bound: Bound) -> Result<Self, Error> {
        Constraint::new(manifold, &Expression::parse(text)?, bound)
    }

    pub fn expression(&self) -> &Expression {
        &self.expr
    }

    pub fn bound(&self) -> Bound {
        self.bound
    }

    /// `expr − bound` at `args = (coords…, level)`.
    fn excess(&self, args: &[f64]) -> Result<f64, Error> {
        let level = args[args.len() - 1];
        let b = match self.bound {
            Bound::Level => level,
            Bound::Constant(c) => c,
        };
        Ok(self.expr.eval_slice(args)? - b)
    }
}

/// A subset of `region × ℝ` given by constraints.
///
/// Levels are sampled at `a + kΛ/4`, `k = 0..4`, where `a` is the largest
/// `expr(x)` over the `expr ≤ level` constraints; without such constraints each
/// entry of `level_origins` plays the role of `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SetSpec {
    pub manifold: ManifoldSpec,
    pub region: Region,
    pub constraints: Vec<Constraint>,
    pub level_origins: Vec<f64>,
    pub level_span: f64,
}

impl SetSpec {
    pub fn new(manifold: &ManifoldSpec, region: &Region, constraints: Vec<Constraint>) -> Self {
        SetSpec {
            manifold: manifold.clone(),
            region: region.clone(),
            constraints,
            level_origins: vec![0.0],
            level_span: DEFAULT_LEVEL_SPAN,
        }
    }

    /// `E(f) = {(x, α) : f(x) ≤ α}` over `region`.
    pub fn epigraph(f: &FunctionOnManifold, region: &Region) -> Result<Self, Error> {
        f.check_region(region)?;
        let c = Constraint::new(f.manifold(), f.expression(), Bound::Level)?;
        Ok(SetSpec::new(f.manifold(), region, vec![c]))
    }

    /// `region × ℝ`.
    pub fn whole(manifold: &ManifoldSpec, region: &Region) -> Self {
        SetSpec::new(manifold, region, Vec::new())
    }

    /// Conjunction of all constraints; level origins are pooled.
    pub fn intersection(sets: &[SetSpec]) -> Result<Self, Error> {
        let first = sets.first().ok_or_else(|| Error::invalid("empty list of sets"))?;
        if sets.iter().any(|s| s.manifold != first.manifold || s.region != first.region) {
            return Err(Error::invalid("sets must share manifold and region"));
        }
        let mut out = SetSpec::new(&first.manifold, &first.region, Vec::new());
        out.level_origins.clear();
        out.level_span = sets.iter().map(|s| s.level_span).fold(0.0, f64::max);
        for s in sets {
            out.constraints.extend(s.constraints.iter().cloned());
            for &o in &s.level_origins {
                if !out.level_origins.contains(&o) {
                    out.level_origins.push(o);
                }
            }
        }
        Ok(out)
    }

    /// Largest `expr − bound` over the constraints; `−∞` for the whole space.
    pub fn excess(&self, coords: &[f64], level: f64) -> Result<f64, Error> {
        let mut args = coords.to_vec();
        args.push(level);
        self.excess_at(&args)
    }

    fn excess_at(&self, args: &[f64]) -> Result<f64, Error> {
        let mut worst = f64::NEG_INFINITY;
        for c in &self.constraints {
            worst = worst.max(c.excess(args)?);
        }
        Ok(worst)
    }

    pub fn contains(&self, p: &ProductPoint, tol: f64) -> Result<bool, Error> {
        let base = self.manifold.point(p.base.coords())?;
        Ok(self.excess(base.coords(), p.level)? <= tol)
    }

    /// Member levels sampled above base point `x`.
    pub fn levels(&self, x: &[f64], tol: f64) -> Result<Vec<f64>, Error> {
        let mut args = x.to_vec();
        args.push(0.0);
        let mut active: Option<f64> = None;
        for c in self.constraints.iter().filter(|c| c.bound == Bound::Level) {
            let v = c.expr.eval_slice(&args)?;
            active = Some(active.map_or(v, |a: f64| a.max(v)));
        }
        let origins = match active {
            Some(a) => vec![a],
            None => self.level_origins.clone(),
        };
        let mut out: Vec<f64> = Vec::new();
        for o in origins {
            for k in 0..=4 {
                let level = o + k as f64 * self.level_span / 4.0;
                if !out.contains(&level) && self.excess(x, level)? <= tol {
                    out.push(level);
                }
            }
        }
        Ok(out)
    }
}

/// Sweeps member pairs `((x, α), (y, β))` and `t`, recording how far the
/// displaced point leaves the set. `None` when no member was sampled.
fn sweep_set(set: &SetSpec, phi: &Bifunction, plan: &SamplingPlan) -> Result<Option<Outcome>, Error> {
    plan.validate()?;
    let tol = plan.tol.closed;
    let points = plan.points(&set.region)?;
    let mut members: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(points.len());
    for p in points {
        let levels = set.levels(&p, tol)?;
        if !levels.is_empty() {
            members.push((p, levels));
        }
    }
    if members.is_empty() {
        return Ok(None);
    }
    let circle = set.manifold.circle_mask();
    let ts = plan.t_grid();
    let rules = SweepRules::closed(tol);
    let dim = circle.len();
    let plain: Vec<&crate::epigraph::Constraint> = set.constraints.iter().filter(|c| !c.uses_level).collect();
    let leveled: Vec<&crate::epigraph::Constraint> = set.constraints.iter().filter(|c| c.uses_level).collect();

    let parts: Vec<Result<Outcome, Error>> = members
        .par_iter()
        .map(|(x, lx)| {
            let mut acc = Outcome::default();
            let mut args = vec![0.0; dim + 1];
            let (mut xa, mut yb) = (x.clone(), vec![0.0; dim + 1]);
            xa.push(0.0);
            let mut plain_vals = vec![0.0; plain.len()];
            for (y, ly) in &members {
                let g = Geodesic::from_coords(&circle, x, y);
                let degenerate = x == y;
                let phis: Vec<Vec<f64>> = lx
                    .iter()
                    .map(|&a| ly.iter().map(|&b| phi.eval(b, a)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<_, _>>()?;
                yb[..dim].copy_from_slice(y);
                for &t in &ts {
                    g.point_into(t, &mut args[..dim]);
                    args[dim] = 0.0;
                    // Level-free constraints depend only on the base point.
                    for (v, c) in plain_vals.iter_mut().zip(&plain) {
                        *v = c.expr.eval_slice(&args)?;
                    }
                    for (i, &a) in lx.iter().enumerate() {
                        xa[dim] = a;
                        for (j, &b) in ly.iter().enumerate() {
                            let level = a + t * phis[i][j];
                            args[dim] = level;
                            let mut excess = f64::NEG_INFINITY;
                            for (v, c) in plain_vals.iter().zip(&plain) {
                                let bound = match c.bound {
                                    Bound::Level => level,
                                    Bound::Constant(k) => k,
                                };
                                excess = excess.max(v - bound);
                            }
                            for c in &leveled {
                                excess = excess.max(c.excess(&args)?);
                            }
                            yb[dim] = b;
                            acc.observe(&xa, &yb, t, excess, 0.0, degenerate, &rules);
                        }
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = Outcome::default();
    for p in parts {
        total.merge(p?);
    }
    Ok(Some(total))
}

/// Sampled check that `set` is geodesic φ-convex.
///
/// A violation stores `(x, α)` and `(y, β)` as `x` and `y` with the level last;
/// `lhs` is the largest constraint excess at the displaced point and `rhs = 0`.
pub fn check_geodesic_phi_convex_set(set: &SetSpec, phi: &Bifunction, plan: &SamplingPlan) -> Result<CheckReport, Error> {
    match sweep_set(set, phi, plan)? {
        Some(out) => Ok(out.report("geodesic_phi_convex_set", &SweepRules::closed(plan.tol.closed))),
        None => Err(Error::invalid("no sampled point of the region carries a member level")),
    }
}

fn agreement(check: &str, hyps: Vec<CheckReport>, a: CheckReport, b: CheckReport) -> CheckReport {
    let agree = a.status == b.status;
    let mut r = CheckReport::new(check, if agree { Status::PassOnSamples } else { Status::Violated })
        .metric("function_violated", (a.status == Status::Violated) as u8 as f64)
        .metric("set_violated", (b.status == Status::Violated) as u8 as f64)
        .note(format!("function check {}, set check {}", a.status, b.status));
    if !agree {
        r.violation = a.violation.clone().or_else(|| b.violation.clone());
        r.worst_margin = r.violation.as_ref().map(|v| v.margin);
    }
    r.samples = hyps.iter().map(|h| h.samples).sum::<u64>() + a.samples + b.samples;
    r.subchecks = hyps;
    r.subchecks.push(a);
    r.subchecks.push(b);
    r
}

/// For non-decreasing φ, compares the function check of `f` with the set check
/// of its epigraph. Agreement is `pass-on-samples`; disagreement is `violated`.
pub fn verify_epigraph_characterization(
    f: &FunctionOnManifold,
    phi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "epigraph_characterization";
    let probe = crate::checker::probe_subcheck(&probe_nondecreasing(phi, &crate::checker::probe_plan(plan))?);
    if !probe.passed() {
        return Ok(CheckReport::hypothesis_failed(ID, vec![probe], "phi is not non-decreasing"));
    }
    let fun = check_geodesic_phi_convex(f, phi, region, plan, false)?;
    let set = check_geodesic_phi_convex_set(&SetSpec::epigraph(f, region)?, phi, plan)?;
    Ok(agreement(ID, vec![probe], fun, set))
}

/// Every set geodesic φ-convex ⇒ the intersection is.
pub fn check_intersection_closure(sets: &[SetSpec], phi: &Bifunction, plan: &SamplingPlan) -> Result<CheckReport, Error> {
    const ID: &str = "intersection_closure";
    let both = SetSpec::intersection(sets)?;
    let mut hyps = Vec::with_capacity(sets.len());
    for (i, s) in sets.iter().enumerate() {
        let r = check_geodesic_phi_convex_set(s, phi, plan)?;
        let ok = r.passed();
        hyps.push(r);
        if !ok {
            return Ok(CheckReport::hypothesis_failed(ID, hyps, format!("set {} is not geodesic phi-convex", i + 1)));
        }
    }
    match sweep_set(&both, phi, plan)? {
        Some(out) => {
            let conclusion = out.report(ID, &SweepRules::closed(plan.tol.closed));
            Ok(CheckReport::concluded(ID, hyps, conclusion))
        }
        None => {
            let mut r = CheckReport::new(ID, Status::Inconclusive).note("the intersection has no sampled member");
            r.samples = hyps.iter().map(|h| h.samples).sum();
            r.subchecks = hyps;
            Ok(r)
        }
    }
}

/// Sampled product points `(x, sup f(x) + kΛ/4)`, `k = −4..4`, where membership
/// in `E(sup fᵢ)` and in `⋂ E(fᵢ)` differ.
pub fn epigraph_identity_mismatches(
    fs: &[FunctionOnManifold],
    region: &Region,
    plan: &SamplingPlan,
) -> Result<(u64, u64), Error> {
    let sup = crate::checker::pointwise_max(fs)?;
    let sup_set = SetSpec::epigraph(&sup, region)?;
    let sets = fs.iter().map(|f| SetSpec::epigraph(f, region)).collect::<Result<Vec<_>, _>>()?;
    let meet = SetSpec::intersection(&sets)?;
    let tol = plan.tol.closed;
    let (mut checked, mut mismatched) = (0u64, 0u64);
    for p in plan.points(region)? {
        let top = sup.eval(&p)?;
        for k in -4..=4 {
            let level = top + k as f64 * DEFAULT_LEVEL_SPAN / 4.0;
            checked += 1;
            if (sup_set.excess(&p, level)? <= tol) != (meet.excess(&p, level)? <= tol) {
                mismatched += 1;
            }
        }
    }
    Ok((checked, mismatched))
}

/// Supremum through epigraphs: φ non-decreasing and every `E(fᵢ)` geodesic
/// φ-convex ⇒ `max fᵢ` geodesic φ-convex. Also records the sampled identity
/// `E(sup fᵢ) = ⋂ E(fᵢ)`.
pub fn sup_via_epigraph(
    fs: &[FunctionOnManifold],
    phi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "sup_via_epigraph";
    if fs.is_empty() {
        return Err(Error::invalid("empty family"));
    }
    let mut hyps = vec![crate::checker::probe_subcheck(&probe_nondecreasing(phi, &crate::checker::probe_plan(plan))?)];
    if !hyps[0].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "phi is not non-decreasing"));
    }
    for (i, f) in fs.iter().enumerate() {
        let r = check_geodesic_phi_convex_set(&SetSpec::epigraph(f, region)?, phi, plan)?;
        let ok = r.passed();
        hyps.push(r);
        if !ok {
            return Ok(CheckReport::hypothesis_failed(ID, hyps, format!("the epigraph of f{} is not geodesic phi-convex", i + 1)));
        }
    }
    let sup = crate::checker::pointwise_max(fs)?;
    let mut top = f64::NEG_INFINITY;
    for p in plan.points(region)? {
        top = top.max(sup.eval(&p)?);
    }
    let (checked, mismatched) = epigraph_identity_mismatches(fs, region, plan)?;
    let conclusion = check_geodesic_phi_convex(&sup, phi, region, plan, false)?;
    Ok(CheckReport::concluded(ID, hyps, conclusion)
        .metric("sampled_sup", top)
        .metric("identity_points", checked as f64)
        .metric("identity_mismatches", mismatched as f64)
        .note(format!("E(sup f_i) = meet of E(f_i) at {} of {checked} sampled points", checked - mismatched)))
}

/// Violation witness re-evaluated as a set displacement, for revalidation.
pub(crate) fn set_excess_independent(
    set: &SetSpec,
    phi: &Bifunction,
    v: &Violation,
) -> Result<(f64, f64, f64), Error> {
    let dim = set.manifold.dim();
    if v.x.len() != dim + 1 || v.y.len() != dim + 1 {
        return Err(Error::invalid("witness does not carry a level"));
    }
    let names = set.manifold.coordinate_names();
    let (alpha, beta) = (v.x[dim], v.y[dim]);
    let px = set.manifold.point(&v.x[..dim])?;
    let py = set.manifold.point(&v.y[..dim])?;
    let bind = |coords: &[f64], level: f64| -> crate::expr::Binding {
        let mut b: crate::expr::Binding = names.iter().map(String::as_str).zip(coords.iter().copied()).collect();
        b.set(LEVEL_VAR, level);
        b
    };
    let excess = |coords: &[f64], level: f64| -> Result<f64, Error> {
        let b = bind(coords, level);
        let mut worst = f64::NEG_INFINITY;
        for c in &set.constraints {
            let bound = match c.bound {
                Bound::Level => level,
                Bound::Constant(k) => k,
            };
            worst = worst.max(c.expr.evaluate(&b)? - bound);
        }
        Ok(worst)
    };
    let g = Geodesic::between(&set.manifold, &px, &py)?;
    let p = g.point(v.t)?;
    let phi_val = phi.expression().evaluate(&crate::expr::Binding::new().with("u", beta).with("v", alpha))?;
    let at = excess(p.coords(), alpha + v.t * phi_val)?;
    let ends = excess(px.coords(), alpha)?.max(excess(py.coords(), beta)?);
    Ok((at, 0.0, ends))
}
