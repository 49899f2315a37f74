// Theorem audits. Each one checks its hypotheses on the samples first and
// returns `hypothesis-failed` before looking at the conclusion.

use super::basic::{check_geodesic_convex, check_geodesic_phi_convex, check_phi_convex_interval, curve_derivative};
use super::engine::{sweep, PairInequality, RowValue, SweepRules};
use super::spec::LimitMode;
use super::{CheckReport, FunctionOnManifold, SamplingPlan, Status, Violation};
use crate::bifunction::{probe_antisymmetric, probe_nonneg_linear, probe_seq_upper_bounded, Bifunction, ProbePlan, ProbeReport, ProbeWitness};
use crate::error::Error;
use crate::expr::Expression;
use crate::manifold::{Geodesic, Region};

/// Probe ranges with the plan's closed-form tolerance.
pub fn probe_plan(plan: &SamplingPlan) -> ProbePlan {
    ProbePlan { tolerance: plan.tol.closed, ..ProbePlan::default() }
}

/// A probe verdict as a sub-report; the witness arguments become `x` and `y`.
pub fn probe_subcheck(p: &ProbeReport) -> CheckReport {
    let mut r = CheckReport::new(
        &format!("probe_{}", p.property),
        if p.holds() { Status::PassOnSamples } else { Status::Violated },
    )
    .note(p.note.clone());
    r.samples = p.samples as u64;
    r.worst_margin = Some(p.worst_defect);
    r.violation = p.witness.as_ref().map(|w| {
        let (x, y, t, lhs, rhs) = match w {
            ProbeWitness::Homogeneous { u, v, lambda, lhs, rhs } => (vec![*u], vec![*v], *lambda, *lhs, *rhs),
            ProbeWitness::Additive { u1, v1, u2, v2, lhs, rhs }
            | ProbeWitness::Nondecreasing { u1, v1, u2, v2, lhs, rhs } => {
                (vec![*u1, *u2], vec![*v1, *v2], 0.0, *lhs, *rhs)
            }
            ProbeWitness::Antisymmetric { u, v, lhs, rhs } => (vec![*u], vec![*v], 0.0, *lhs, *rhs),
            ProbeWitness::Sequence { xs, ys, lhs, rhs } => (xs.values.clone(), ys.values.clone(), 0.0, *lhs, *rhs),
        };
        Violation { x, y, t, lhs, rhs, margin: w.defect() }
    });
    r
}

/// Sorted distinct values of `f` on the region samples.
pub(crate) fn sampled_range(f: &FunctionOnManifold, region: &Region, plan: &SamplingPlan) -> Result<Vec<f64>, Error> {
    let mut vals = plan
        .points(region)?
        .iter()
        .map(|p| f.eval(p))
        .collect::<Result<Vec<_>, _>>()?;
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    Ok(vals)
}

/// At most `cap` values spread evenly over a sorted list, ends included.
fn thin(vals: &[f64], cap: usize) -> Vec<f64> {
    if vals.len() <= cap {
        return vals.to_vec();
    }
    (0..cap).map(|k| vals[k * (vals.len() - 1) / (cap - 1)]).collect()
}

/// `g` non-decreasing over consecutive sorted sample values.
pub(crate) fn nondecreasing_report(g: &Expression, sorted: &[f64], tol: f64) -> Result<CheckReport, Error> {
    let gv = sorted.iter().map(|&v| g.eval_scalar(v)).collect::<Result<Vec<_>, _>>()?;
    let mut worst: Option<Violation> = None;
    let mut worst_margin = f64::NEG_INFINITY;
    for k in 1..sorted.len() {
        let margin = gv[k - 1] - gv[k];
        if margin > worst_margin {
            worst_margin = margin;
            worst = Some(Violation {
                x: vec![sorted[k - 1]],
                y: vec![sorted[k]],
                t: 0.0,
                lhs: gv[k - 1],
                rhs: gv[k],
                margin,
            });
        }
    }
    let violated = worst_margin > tol;
    let mut r = CheckReport::new("g_nondecreasing", if violated { Status::Violated } else { Status::PassOnSamples });
    r.samples = sorted.len() as u64;
    r.worst_margin = worst.as_ref().map(|w| w.margin);
    r.violation = if violated { worst } else { None };
    Ok(r)
}

fn on_manifold(f: &FunctionOnManifold, expr: &Expression) -> Result<FunctionOnManifold, Error> {
    FunctionOnManifold::from_expression(f.manifold(), expr)
}

fn compose(g: &Expression, f: &FunctionOnManifold) -> Result<FunctionOnManifold, Error> {
    if g.vars().len() > 1 {
        return Err(Error::invalid(format!("outer function has variables {:?}", g.vars())));
    }
    let e = g.compose(f.expression()).map_err(Error::invalid)?;
    on_manifold(f, &e)
}

/// Composition: `f` geodesic convex, `g` non-decreasing and φ-convex on the
/// sampled range of `f` ⇒ `g∘f` geodesic φ-convex.
pub fn check_composition(
    f: &FunctionOnManifold,
    g: &Expression,
    phi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
    strict: bool,
) -> Result<CheckReport, Error> {
    const ID: &str = "composition";
    let gf = compose(g, f)?;
    let mut hyps = vec![check_geodesic_convex(f, region, plan)?];
    if !hyps[0].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "f is not geodesic convex on the samples"));
    }
    let range = sampled_range(f, region, plan)?;
    hyps.push(nondecreasing_report(g, &range, plan.tol.closed)?);
    if !hyps[1].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "g is not non-decreasing on the sampled range of f"));
    }
    let (lo, hi) = (range[0], range[range.len() - 1]);
    if lo < hi {
        hyps.push(check_phi_convex_interval(g, phi, (lo, hi), plan)?);
        if !hyps[2].passed() {
            return Ok(CheckReport::hypothesis_failed(ID, hyps, "g is not phi-convex on the sampled range of f"));
        }
    }
    let conclusion = check_geodesic_phi_convex(&gf, phi, region, plan, strict)?;
    Ok(CheckReport::concluded(ID, hyps, conclusion))
}

/// Weighted sum: φ nonnegatively linear, every `fᵢ` geodesic φ-convex, `λᵢ ≥ 0`
/// ⇒ `Σ λᵢfᵢ` geodesic φ-convex.
pub fn check_weighted_sum(
    fs: &[FunctionOnManifold],
    lambdas: &[f64],
    phi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "weighted_sum";
    if fs.is_empty() || fs.len() != lambdas.len() {
        return Err(Error::invalid("need one weight per function and at least one function"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Ok(CheckReport::hypothesis_failed(ID, Vec::new(), format!("weight {l} is negative")));
    }
    let mut hyps = vec![probe_subcheck(&probe_nonneg_linear(phi, &probe_plan(plan))?)];
    if !hyps[0].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "phi is not nonnegatively linear"));
    }
    for (i, f) in fs.iter().enumerate() {
        let r = check_geodesic_phi_convex(f, phi, region, plan, false)?;
        let ok = r.passed();
        hyps.push(r);
        if !ok {
            return Ok(CheckReport::hypothesis_failed(ID, hyps, format!("f{} is not geodesic phi-convex", i + 1)));
        }
    }
    let names = fs[0].manifold().coordinate_names();
    let terms: Vec<(f64, &Expression)> = lambdas.iter().copied().zip(fs.iter().map(|f| f.expression())).collect();
    let sum = on_manifold(&fs[0], &Expression::weighted_sum(&terms, &names))?;
    let conclusion = check_geodesic_phi_convex(&sum, phi, region, plan, false)?;
    Ok(CheckReport::concluded(ID, hyps, conclusion))
}

/// A coordinate map given by one expression per coordinate.
fn apply_map(map: &[Expression], p: &[f64], circle: &[bool], out: &mut [f64]) -> Result<(), Error> {
    for ((o, e), &c) in out.iter_mut().zip(map).zip(circle) {
        let v = e.eval_slice(p)?;
        *o = if c { crate::manifold::normalize_angle(v) } else { v };
    }
    Ok(())
}

pub(crate) fn coordinate_map(f: &FunctionOnManifold, map: &[Expression]) -> Result<Vec<Expression>, Error> {
    let names = f.manifold().coordinate_names();
    if map.len() != names.len() {
        return Err(Error::invalid(format!("map has {} components for {} coordinates", map.len(), names.len())));
    }
    map.iter()
        .map(|e| e.with_vars(&names).map_err(|v| Error::invalid(format!("`{v}` is not a coordinate"))))
        .collect()
}

pub(crate) struct PushforwardIneq<'a> {
    pub f: &'a FunctionOnManifold,
    pub phi: &'a Bifunction,
    pub forward: &'a [Expression],
    pub inverse: &'a [Expression],
    pub circle: Vec<bool>,
}

impl PushforwardIneq<'_> {
    /// `(f∘F⁻¹)(q)`.
    fn pulled(&self, q: &[f64], buf: &mut [f64]) -> Result<f64, Error> {
        apply_map(self.inverse, q, &self.circle, buf)?;
        Ok(self.f.eval(buf)?)
    }
}

impl PairInequality for PushforwardIneq<'_> {
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let n = x.len();
        let (mut q, mut buf, mut pt) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        apply_map(self.forward, x, &self.circle, &mut q)?;
        let hx = self.pulled(&q, &mut buf)?;
        apply_map(self.forward, y, &self.circle, &mut q)?;
        let hy = self.pulled(&q, &mut buf)?;
        let p = self.phi.eval(hy, hx)?;
        let g = Geodesic::from_coords(&self.circle, x, y);
        for &t in ts {
            g.point_into(t, &mut pt);
            apply_map(self.forward, &pt, &self.circle, &mut q)?;
            out.push(RowValue::Value(self.pulled(&q, &mut buf)?, hx + t * p));
        }
        Ok(())
    }
}

/// Pushforward: `F⁻¹∘F = id` on the samples and `f` geodesic φ-convex ⇒
/// `f∘F⁻¹` satisfies the inequality along the image curves `F∘γ`.
pub fn check_pushforward(
    f: &FunctionOnManifold,
    phi: &Bifunction,
    forward: &[Expression],
    inverse: &[Expression],
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "pushforward";
    plan.validate()?;
    f.check_region(region)?;
    let forward = coordinate_map(f, forward)?;
    let inverse = coordinate_map(f, inverse)?;
    let circle = f.manifold().circle_mask();
    let points = plan.points(region)?;

    let n = circle.len();
    let (mut q, mut back) = (vec![0.0; n], vec![0.0; n]);
    let mut worst: Option<Violation> = None;
    for p in &points {
        apply_map(&forward, p, &circle, &mut q)?;
        apply_map(&inverse, &q, &circle, &mut back)?;
        let dev = p
            .iter()
            .zip(&back)
            .zip(&circle)
            .map(|((a, b), &c)| if c { crate::manifold::shorter_arc(*a, *b).abs() } else { (a - b).abs() })
            .fold(0.0, f64::max);
        if worst.as_ref().is_none_or(|w| dev > w.lhs) {
            worst = Some(Violation { x: p.clone(), y: back.clone(), t: 0.0, lhs: dev, rhs: 1e-9, margin: dev - 1e-9 });
        }
    }
    let mut inv = CheckReport::new("inverse_pair", Status::PassOnSamples);
    inv.samples = points.len() as u64;
    inv.worst_margin = worst.as_ref().map(|w| w.margin);
    if let Some(w) = worst.filter(|w| w.margin > 0.0) {
        inv.status = Status::Violated;
        inv.violation = Some(w);
    }
    let mut hyps = vec![inv];
    if !hyps[0].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "F_inv is not a left inverse of F on the samples"));
    }
    hyps.push(check_geodesic_phi_convex(f, phi, region, plan, false)?);
    if !hyps[1].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "f is not geodesic phi-convex"));
    }
    let rules = SweepRules::closed(plan.tol.closed);
    let ineq = PushforwardIneq { f, phi, forward: &forward, inverse: &inverse, circle };
    let conclusion = sweep(&ineq, &points, &points, &plan.t_grid(), &rules)?.report(ID, &rules);
    Ok(CheckReport::concluded(ID, hyps, conclusion))
}

/// Grid on the Euclidean ball of `radius` around `center`, `count` per axis.
fn ball_grid(center: &[f64], radius: f64, count: usize) -> Vec<Vec<f64>> {
    let axis = super::uniform(-radius, radius, count);
    let n = center.len();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let off: Vec<f64> = idx.iter().map(|&k| axis[k]).collect();
        if off.iter().map(|o| o * o).sum::<f64>().sqrt() <= radius * (1.0 + 1e-12) {
            out.push(center.iter().zip(&off).map(|(c, o)| c + o).collect());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axis.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Local Lipschitz bound: with `M_φ` the sampled maximum of φ on `f(B)×f(B)`,
/// `B = B(a, h)`, checks `|f(x) − f(y)| ≤ (M_φ/ε)·‖x − y‖` on `B̄(a, r)`.
///
/// `f` is written over `h1..hn` (any single variable when `n = 1`).
pub fn check_lipschitz_bound(
    f: &Expression,
    phi: &Bifunction,
    center: &[f64],
    outer: f64,
    radius: f64,
    epsilon: f64,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "lipschitz_bound";
    plan.validate()?;
    if center.is_empty() || !(radius > 0.0 && epsilon > 0.0 && radius + epsilon < outer) {
        return Err(Error::invalid("need r > 0, ε > 0 and r + ε < h"));
    }
    let f = super::basic::over_coordinates(f, center.len())?;
    let big = ball_grid(center, outer, plan.line_count);
    let mut fb = big.iter().map(|p| f.eval_slice(p)).collect::<Result<Vec<_>, _>>()?;
    fb.sort_by(f64::total_cmp);
    fb.dedup();
    let mut m_phi = f64::NEG_INFINITY;
    for &u in &fb {
        for &v in &fb {
            m_phi = m_phi.max(phi.eval(u, v)?);
        }
    }
    let k = m_phi / epsilon;
    let small = ball_grid(center, radius, plan.line_count);
    let vals = small.iter().map(|p| f.eval_slice(p)).collect::<Result<Vec<_>, _>>()?;
    let tol = plan.tol.closed;
    let (mut samples, mut max_q) = (0u64, 0.0f64);
    let mut worst: Option<Violation> = None;
    for (i, x) in small.iter().enumerate() {
        for (j, y) in small.iter().enumerate() {
            if i == j {
                continue;
            }
            let dist = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let lhs = (vals[i] - vals[j]).abs();
            let rhs = k * dist;
            samples += 1;
            max_q = max_q.max(lhs / dist);
            if worst.as_ref().is_none_or(|w| lhs - rhs > w.margin) {
                worst = Some(Violation { x: x.clone(), y: y.clone(), t: 0.0, lhs, rhs, margin: lhs - rhs });
            }
        }
    }
    let mut r = CheckReport::new(ID, Status::PassOnSamples)
        .metric("m_phi", m_phi)
        .metric("k", k)
        .metric("max_quotient", max_q)
        .metric("pairs", samples as f64);
    r.samples = samples;
    r.worst_margin = worst.as_ref().map(|w| w.margin);
    if m_phi <= 0.0 {
        r.notes.push(format!("sampled M_phi = {m_phi} is not positive"));
    }
    match worst.filter(|w| w.margin > tol) {
        Some(w) => {
            r.status = Status::Violated;
            r.violation = Some(w);
        }
        None => r.notes.push(format!("quotient {max_q} within K = {k} on samples")),
    }
    Ok(r)
}

/// Supremum of a family: φ sequentially upper bounded and every `fᵢ` geodesic
/// φ-convex ⇒ `max fᵢ` geodesic φ-convex.
pub fn check_sup_family(
    fs: &[FunctionOnManifold],
    phi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "sup_family";
    if fs.is_empty() {
        return Err(Error::invalid("empty family"));
    }
    let mut hyps = vec![probe_subcheck(&probe_seq_upper_bounded(phi, &probe_plan(plan))?)];
    if !hyps[0].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "phi is not sequentially upper bounded"));
    }
    for (i, f) in fs.iter().enumerate() {
        let r = check_geodesic_phi_convex(f, phi, region, plan, false)?;
        let ok = r.passed();
        hyps.push(r);
        if !ok {
            return Ok(CheckReport::hypothesis_failed(ID, hyps, format!("f{} is not geodesic phi-convex", i + 1)));
        }
    }
    let sup = pointwise_max(fs)?;
    let conclusion = check_geodesic_phi_convex(&sup, phi, region, plan, false)?;
    Ok(CheckReport::concluded(ID, hyps, conclusion))
}

pub(crate) fn pointwise_max(fs: &[FunctionOnManifold]) -> Result<FunctionOnManifold, Error> {
    let names = fs[0].manifold().coordinate_names();
    let exprs: Vec<&Expression> = fs.iter().map(|f| f.expression()).collect();
    let e = Expression::pointwise_max(&exprs, &names).ok_or_else(|| Error::invalid("empty family"))?;
    on_manifold(&fs[0], &e)
}

/// Radius of the ball on which local minimality is sampled.
pub const LOCAL_MIN_RADIUS: f64 = 0.1;

struct LocalMinIneq<'a> {
    f: &'a FunctionOnManifold,
    phi: &'a Bifunction,
}

impl PairInequality for LocalMinIneq<'_> {
    // lhs 0, rhs φ(f(x), f(x₀)); `y` is x₀.
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let v = self.phi.eval(self.f.eval(x)?, self.f.eval(y)?)?;
        out.extend(ts.iter().map(|_| RowValue::Value(0.0, v)));
        Ok(())
    }
}

/// Local minimum at an interior `x₀` of a geodesic φ-convex `f` ⇒
/// `φ(f(x), f(x₀)) ≥ 0` on the region.
pub fn check_local_min_criterion(
    f: &FunctionOnManifold,
    phi: &Bifunction,
    x0: &[f64],
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "local_min";
    plan.validate()?;
    f.check_region(region)?;
    let x0 = f.manifold().point(x0)?.into_coords();
    if !region.interior_contains(&x0) {
        return Ok(CheckReport::hypothesis_failed(ID, Vec::new(), "x0 is not interior to the region"));
    }
    // Ball of radius ρ: five offsets per factor, circles wrapped.
    let offsets = [-LOCAL_MIN_RADIUS, -LOCAL_MIN_RADIUS / 2.0, 0.0, LOCAL_MIN_RADIUS / 2.0, LOCAL_MIN_RADIUS];
    let f0 = f.eval(&x0)?;
    let mut ball = vec![x0.clone()];
    for k in 0..x0.len() {
        ball = ball
            .into_iter()
            .flat_map(|p| {
                offsets.iter().map(move |o| {
                    let mut q = p.clone();
                    q[k] = region.clamp_coord(k, q[k] + o);
                    q
                })
            })
            .collect();
    }
    let mut lowest: Option<(f64, Vec<f64>)> = None;
    for p in &ball {
        let v = f.eval(p)?;
        if lowest.as_ref().is_none_or(|(l, _)| v < *l) {
            lowest = Some((v, p.clone()));
        }
    }
    let (low, at) = lowest.expect("ball is non-empty");
    let mut min_r = CheckReport::new("local_minimum", Status::PassOnSamples).metric("lowest_value", low);
    min_r.samples = ball.len() as u64;
    min_r.worst_margin = Some(f0 - low);
    if f0 - low > plan.tol.closed {
        min_r.status = Status::Violated;
        min_r.violation = Some(Violation { x: x0.clone(), y: at, t: 0.0, lhs: f0, rhs: low, margin: f0 - low });
    }
    let mut hyps = vec![min_r];
    if !hyps[0].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "x0 is not a sampled local minimum"));
    }
    hyps.push(check_geodesic_phi_convex(f, phi, region, plan, false)?);
    if !hyps[1].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "f is not geodesic phi-convex"));
    }
    let rules = SweepRules::closed(plan.tol.closed);
    let points = plan.points(region)?;
    let conclusion = sweep(&LocalMinIneq { f, phi }, &points, &[x0], &[0.0], &rules)?.report(ID, &rules);
    Ok(CheckReport::concluded(ID, hyps, conclusion))
}

/// Limits of bifunctions: `f` geodesic φₙ-convex for `n = 1..N` (pointwise) or
/// for the partial sums `Σ_{k≤n} φₖ` (series) ⇒ `f` geodesic φ-convex for the
/// limit. `family` is written over `u`, `v`, `n`.
pub fn check_phi_limit(
    f: &FunctionOnManifold,
    family: &Expression,
    mode: LimitMode,
    terms: usize,
    limit: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "phi_limit";
    if terms == 0 {
        return Err(Error::invalid("the number of terms must be at least 1"));
    }
    let uvn = ["u", "v", "n"].map(String::from);
    let family = family
        .with_vars(&uvn)
        .map_err(|v| Error::invalid(format!("`{v}` is not one of u, v, n")))?;
    let uv = ["u".to_string(), "v".to_string()];
    let mut members: Vec<Expression> = Vec::with_capacity(terms);
    for n in 1..=terms {
        let term = family.bind_constant("n", n as f64);
        let e = match (mode, members.last()) {
            (LimitMode::Series, Some(prev)) => Expression::add(prev, &term, &uv),
            _ => term,
        };
        members.push(e);
    }
    let mut hyps = Vec::with_capacity(terms);
    for (i, e) in members.iter().enumerate() {
        let phi_n = Bifunction::from_expression(&format!("phi_{}", i + 1), e.clone()).expect("declared over u, v");
        let r = check_geodesic_phi_convex(f, &phi_n, region, plan, false)?;
        let ok = r.passed();
        hyps.push(r);
        if !ok {
            return Ok(CheckReport::hypothesis_failed(ID, hyps, format!("f is not geodesic phi_{}-convex", i + 1)));
        }
    }
    let last = members.last().expect("terms >= 1");
    let vals = thin(&sampled_range(f, region, plan)?, plan.line_count);
    let mut dev = 0.0f64;
    for &u in &vals {
        for &v in &vals {
            dev = dev.max((last.eval_slice(&[u, v])? - limit.eval(u, v)?).abs());
        }
    }
    let conclusion = check_geodesic_phi_convex(f, limit, region, plan, false)?;
    Ok(CheckReport::concluded(ID, hyps, conclusion)
        .metric("max_deviation", dev)
        .note(format!("max |phi_{terms} - phi| on sampled values: {dev}")))
}

struct EndpointIneq<'a> {
    f: &'a FunctionOnManifold,
    circle: Vec<bool>,
    step: f64,
    tol: f64,
}

impl PairInequality for EndpointIneq<'_> {
    // lhs −|D₀ − D₁|, rhs −τ_fd: a positive margin means the derivatives agree.
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let g = Geodesic::from_coords(&self.circle, x, y);
        let mut buf = vec![0.0; x.len()];
        let d0 = curve_derivative(self.f, &g, 0.0, self.step, &mut buf);
        let d1 = curve_derivative(self.f, &g, 1.0, self.step, &mut buf);
        let v = match (d0, d1) {
            (Some(a), Some(b)) => RowValue::Value(-(a - b).abs(), -self.tol),
            _ => RowValue::Inconclusive,
        };
        out.extend(ts.iter().map(|_| v));
        Ok(())
    }
}

/// Antisymmetric φ and strictly geodesic φ-convex `f` ⇒ the derivatives of
/// `f∘γ` at `t = 0` and `t = 1` differ for `x ≠ y`.
///
/// A violation (`t = 0`) has `lhs = −|D₀ − D₁|` and `rhs = −τ_fd`.
pub fn audit_endpoint_derivatives(
    f: &FunctionOnManifold,
    phi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "endpoint_derivatives";
    let mut hyps = vec![probe_subcheck(&probe_antisymmetric(phi, &probe_plan(plan))?)];
    if !hyps[0].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "phi is not antisymmetric"));
    }
    hyps.push(check_geodesic_phi_convex(f, phi, region, plan, true)?);
    if !hyps[1].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "f is not strictly geodesic phi-convex"));
    }
    let points = plan.points(region)?;
    let rules = SweepRules { threshold: 0.0, strict: None, skip_degenerate: true };
    let ineq = EndpointIneq { f, circle: f.manifold().circle_mask(), step: plan.tol.fd_step, tol: plan.tol.fd };
    let conclusion = sweep(&ineq, &points, &points, &[0.0], &rules)?.report(ID, &rules);
    Ok(CheckReport::concluded(ID, hyps, conclusion))
}

struct GPreinvexIneq<'a> {
    g: &'a Expression,
    phi: &'a Bifunction,
    psi: &'a Bifunction,
}

impl PairInequality for GPreinvexIneq<'_> {
    // g(b + tφ(a, b)) ≤ g(b) + tψ(g(a), g(b)) with x = [a], y = [b].
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let (a, b) = (x[0], y[0]);
        let p = self.phi.eval(a, b)?;
        let (ga, gb) = (self.g.eval_scalar(a)?, self.g.eval_scalar(b)?);
        let q = self.psi.eval(ga, gb)?;
        for &t in ts {
            out.push(RowValue::Value(self.g.eval_scalar(b + t * p)?, gb + t * q));
        }
        Ok(())
    }
}

/// `f` geodesic φ-convex, `g` non-decreasing and G-preinvex with respect to
/// `(φ, ψ)` on the sampled range ⇒ `g∘f` geodesic ψ-convex.
pub fn check_g_preinvex_composition(
    f: &FunctionOnManifold,
    g: &Expression,
    phi: &Bifunction,
    psi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    const ID: &str = "g_preinvex_composition";
    let gf = compose(g, f)?;
    let mut hyps = vec![check_geodesic_phi_convex(f, phi, region, plan, false)?];
    if !hyps[0].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "f is not geodesic phi-convex"));
    }
    let range = sampled_range(f, region, plan)?;
    hyps.push(nondecreasing_report(g, &range, plan.tol.closed)?);
    if !hyps[1].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "g is not non-decreasing on the sampled range of f"));
    }
    let vals: Vec<Vec<f64>> = thin(&range, plan.line_count).into_iter().map(|v| vec![v]).collect();
    let rules = SweepRules::closed(plan.tol.closed);
    hyps.push(sweep(&GPreinvexIneq { g, phi, psi }, &vals, &vals, &plan.t_grid(), &rules)?.report("g_preinvex", &rules));
    if !hyps[2].passed() {
        return Ok(CheckReport::hypothesis_failed(ID, hyps, "g is not G-preinvex with respect to (phi, psi)"));
    }
    let conclusion = check_geodesic_phi_convex(&gf, psi, region, plan, false)?;
    Ok(CheckReport::concluded(ID, hyps, conclusion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldSpec;

    fn plan() -> SamplingPlan {
        SamplingPlan::default()
    }

    fn e(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    fn line_fn(s: &str) -> FunctionOnManifold {
        FunctionOnManifold::parse(&ManifoldSpec::line(), s).unwrap()
    }

    fn line_region(a: f64, b: f64) -> Region {
        Region::boxed(&ManifoldSpec::line(), &[(a, b)]).unwrap()
    }

    fn bf(name: &str) -> Bifunction {
        Bifunction::builtin(name).unwrap()
    }

    #[test]
    fn composition_examples() {
        let cyl = ManifoldSpec::cylinder();
        let region = Region::boxed(&cyl, &[(-1.0, 1.0)]).unwrap();
        let small = SamplingPlan { line_count: 9, circle_count: 4, ..plan() };
        let sq = FunctionOnManifold::parse(&cyl, "h1^2").unwrap();
        assert!(check_composition(&sq, &e("u"), &bf("diff"), &region, &small, false).unwrap().passed());
        assert!(check_composition(&sq, &e("exp(u)"), &bf("diff"), &region, &small, false).unwrap().passed());
        let cube = FunctionOnManifold::parse(&cyl, "h1^3").unwrap();
        let wide = Region::boxed(&cyl, &[(-3.0, 3.0)]).unwrap();
        let r = check_composition(&cube, &e("u"), &bf("diff"), &wide, &small, false).unwrap();
        assert_eq!(r.status, Status::HypothesisFailed);
    }

    #[test]
    fn weighted_sum_examples() {
        let fs = [line_fn("h1^2"), line_fn("h1^4")];
        let r = line_region(-1.0, 1.0);
        assert!(check_weighted_sum(&fs, &[2.0, 3.0], &bf("diff"), &r, &plan()).unwrap().passed());
        let zero = check_weighted_sum(&fs, &[0.0, 0.0], &bf("diff"), &r, &plan()).unwrap();
        assert!(zero.passed());
        assert_eq!(zero.worst_margin, Some(0.0));
        let bad = check_weighted_sum(&fs, &[2.0, 3.0], &bf("cube_diff"), &r, &plan()).unwrap();
        assert_eq!(bad.status, Status::HypothesisFailed);
        assert_eq!(bad.subchecks[0].check, "probe_nonneg_linear");
    }

    #[test]
    fn pushforward_examples() {
        let sq = line_fn("h1^2");
        let r = line_region(-1.0, 1.0);
        let diff = bf("diff");
        assert!(check_pushforward(&sq, &diff, &[e("h1 + 1")], &[e("h1 - 1")], &r, &plan()).unwrap().passed());
        assert!(check_pushforward(&sq, &diff, &[e("2*h1")], &[e("h1/2")], &r, &plan()).unwrap().passed());
        let bad = check_pushforward(&sq, &diff, &[e("h1^3")], &[e("h1^2")], &r, &plan()).unwrap();
        assert_eq!(bad.status, Status::HypothesisFailed);
    }

    #[test]
    fn lipschitz_examples() {
        let diff = bf("diff");
        let r = check_lipschitz_bound(&e("x^2"), &diff, &[0.0], 1.0, 0.5, 0.25, &plan()).unwrap();
        assert!(r.passed());
        assert!((r.metrics["k"] - 4.0).abs() < 1e-12);
        assert!(r.metrics["max_quotient"] <= 1.0 + 1e-9);
        assert!(r.samples >= 500);
        let c = check_lipschitz_bound(&e("5"), &diff, &[0.0], 1.0, 0.5, 0.25, &plan()).unwrap();
        assert!(c.passed());
        assert_eq!(c.metrics["max_quotient"], 0.0);
        let tight = check_lipschitz_bound(&e("x^2"), &diff, &[0.0], 1.0, 0.5, 0.01, &plan()).unwrap();
        assert!((tight.metrics["k"] - 100.0).abs() < 1e-9);
        assert!(tight.passed());
    }

    #[test]
    fn sup_family_examples() {
        let r = line_region(1.0, 2.0);
        let fam = [line_fn("h1^2"), line_fn("h1^2 - 1")];
        assert!(check_sup_family(&fam, &bf("sum"), &r, &plan()).unwrap().passed());
        let bad = check_sup_family(&fam, &bf("prod"), &r, &plan()).unwrap();
        assert_eq!(bad.status, Status::HypothesisFailed);
        // h1² − 1 is not sum-convex on [0, 1]: x = 0, y = 1, t = 1 gives 0 > −1 + (0 − 1).
        let low = check_sup_family(&fam, &bf("sum"), &line_region(0.0, 1.0), &plan()).unwrap();
        assert_eq!(low.status, Status::HypothesisFailed);
    }

    #[test]
    fn local_min_examples() {
        let cyl = ManifoldSpec::cylinder();
        let region = Region::boxed(&cyl, &[(-1.0, 1.0)]).unwrap();
        let sq = FunctionOnManifold::parse(&cyl, "h1^2").unwrap();
        for phi in ["diff", "sum"] {
            assert!(check_local_min_criterion(&sq, &bf(phi), &[0.0, 0.0], &region, &plan()).unwrap().passed());
        }
        let lin = FunctionOnManifold::parse(&cyl, "h1").unwrap();
        let r = check_local_min_criterion(&lin, &bf("diff"), &[0.0, 0.0], &region, &plan()).unwrap();
        assert_eq!(r.status, Status::HypothesisFailed);
    }

    #[test]
    fn phi_limit_examples() {
        let sq = line_fn("h1^2");
        let r = line_region(0.0, 1.0);
        let fam = Expression::parse_with_vars("u - v + 1/n", &["u", "v", "n"]).unwrap();
        let rep = check_phi_limit(&sq, &fam, LimitMode::Pointwise, 10, &bf("diff"), &r, &plan()).unwrap();
        assert!(rep.passed());
        assert!((rep.metrics["max_deviation"] - 0.1).abs() < 1e-12);
        let geo = Expression::parse_with_vars("(u - v + 1)/2^n", &["u", "v", "n"]).unwrap();
        let limit = Bifunction::parse("limit", "u - v + 1").unwrap();
        let rep = check_phi_limit(&sq, &geo, LimitMode::Series, 10, &limit, &r, &plan()).unwrap();
        assert!(rep.passed());
        assert!(check_phi_limit(&sq, &fam, LimitMode::Pointwise, 0, &bf("diff"), &r, &plan()).is_err());
    }

    #[test]
    fn endpoint_derivative_examples() {
        let diff = bf("diff");
        assert!(audit_endpoint_derivatives(&line_fn("h1^2"), &diff, &line_region(0.0, 1.0), &plan()).unwrap().passed());
        assert!(audit_endpoint_derivatives(&line_fn("h1^2"), &diff, &line_region(-1.0, 1.0), &plan()).unwrap().passed());
        let lin = audit_endpoint_derivatives(&line_fn("2*h1"), &diff, &line_region(0.0, 1.0), &plan()).unwrap();
        assert_eq!(lin.status, Status::HypothesisFailed);
    }

    #[test]
    fn g_preinvex_examples() {
        let sq = line_fn("h1^2");
        let r = line_region(0.0, 1.0);
        let diff = bf("diff");
        assert!(check_g_preinvex_composition(&sq, &e("u"), &diff, &diff, &r, &plan()).unwrap().passed());
        assert!(check_g_preinvex_composition(&sq, &e("exp(u)"), &diff, &diff, &r, &plan()).unwrap().passed());
        let dec = check_g_preinvex_composition(&sq, &e("-u"), &diff, &diff, &r, &plan()).unwrap();
        assert_eq!(dec.status, Status::HypothesisFailed);
    }
}
