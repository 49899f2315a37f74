// Direct inequality checks: the interval and geodesic forms, the chord bound,
// the differential and slope forms, preinvexity, and the one-dimensional audits.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::engine::{sweep, Outcome, PairInequality, RowValue, Sample, SweepRules};
use super::{CheckReport, FunctionOnManifold, SamplingPlan, Status, Violation};
use crate::bifunction::Bifunction;
use crate::error::Error;
use crate::expr::{EvalError, Expression};
use crate::manifold::{Geodesic, ManifoldSpec, Region};

/// A configured sweep: inequality, sampling domain and tolerance rules.
pub(crate) struct Problem<'a> {
    pub id: &'static str,
    pub ineq: Box<dyn PairInequality + 'a>,
    /// Domain of the endpoints, used to clamp refined samples.
    pub region: Region,
    pub counts: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    pub ts: Vec<f64>,
    pub rules: SweepRules,
}

impl Problem<'_> {
    pub fn run(&self) -> Result<Outcome, Error> {
        sweep(&*self.ineq, &self.points, &self.points, &self.ts, &self.rules)
    }

    pub fn report(&self) -> Result<CheckReport, Error> {
        Ok(self.run()?.report(self.id, &self.rules))
    }
}

fn check_interval(a: f64, b: f64) -> Result<Region, Error> {
    Ok(Region::boxed(&ManifoldSpec::line(), &[(a, b)])?)
}

fn one_var(f: &Expression) -> Result<(), Error> {
    if f.vars().len() > 1 {
        return Err(Error::invalid(format!("expected a function of one variable, got {:?}", f.vars())));
    }
    Ok(())
}

pub(crate) struct IntervalIneq<'a> {
    pub f: &'a Expression,
    pub phi: &'a Bifunction,
}

impl PairInequality for IntervalIneq<'_> {
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let (a, b) = (x[0], y[0]);
        let fa = self.f.eval_scalar(a)?;
        let fb = self.f.eval_scalar(b)?;
        let p = self.phi.eval(fa, fb)?;
        for &t in ts {
            let lhs = self.f.eval_scalar(t * a + (1.0 - t) * b)?;
            out.push(RowValue::Value(lhs, fb + t * p));
        }
        Ok(())
    }
}

pub(crate) fn interval_problem<'a>(
    f: &'a Expression,
    phi: &'a Bifunction,
    (a, b): (f64, f64),
    plan: &SamplingPlan,
) -> Result<Problem<'a>, Error> {
    plan.validate()?;
    one_var(f)?;
    let region = check_interval(a, b)?;
    Ok(Problem {
        id: "phi_convex_interval",
        ineq: Box::new(IntervalIneq { f, phi }),
        region,
        counts: vec![plan.line_count],
        points: plan.interval_grid(a, b).into_iter().map(|v| vec![v]).collect(),
        ts: plan.t_grid(),
        rules: SweepRules::closed(plan.tol.closed),
    })
}

/// `f(tx + (1−t)y) ≤ f(y) + t·φ(f(x), f(y))` for sampled `x, y ∈ [a, b]`, `t ∈ [0, 1]`.
pub fn check_phi_convex_interval(
    f: &Expression,
    phi: &Bifunction,
    interval: (f64, f64),
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    interval_problem(f, phi, interval, plan)?.report()
}

struct SlopeIneq<'a> {
    f: &'a Expression,
    phi: &'a Bifunction,
    gap: f64,
}

impl PairInequality for SlopeIneq<'_> {
    // x = [x₁], y = [x₂], and the middle point is x₁ + t(x₂ − x₁).
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let (x1, x2) = (x[0], y[0]);
        if !(x1 < x2) {
            out.extend(ts.iter().map(|_| RowValue::Skip));
            return Ok(());
        }
        let f1 = self.f.eval_scalar(x1)?;
        let f2 = self.f.eval_scalar(x2)?;
        let bound = self.phi.eval(f1, f2)? / (x1 - x2);
        for &t in ts {
            let m = x1 + t * (x2 - x1);
            if m - x1 < self.gap || x2 - m < self.gap {
                out.push(RowValue::Skip);
                continue;
            }
            let slope = (f2 - self.f.eval_scalar(m)?) / (x2 - m);
            out.push(RowValue::Value(bound, slope));
        }
        Ok(())
    }
}

/// `(f(x₂) − f(x))/(x₂ − x) ≥ φ(f(x₁), f(x₂))/(x₁ − x₂)` for sampled
/// `x₁ < x < x₂` with both gaps at least `min_gap`.
///
/// In a violation `x = [x₁]`, `y = [x₂]` and the middle point is `x₁ + t(x₂ − x₁)`.
pub fn check_slope_inequality(
    f: &Expression,
    phi: &Bifunction,
    (a, b): (f64, f64),
    min_gap: f64,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    plan.validate()?;
    one_var(f)?;
    check_interval(a, b)?;
    let points: Vec<Vec<f64>> = plan.interval_grid(a, b).into_iter().map(|v| vec![v]).collect();
    let ts = plan.t_grid();
    let rules = SweepRules { threshold: plan.tol.closed, strict: None, skip_degenerate: true };
    let out = sweep(&SlopeIneq { f, phi, gap: min_gap }, &points, &points, &ts, &rules)?;
    if out.samples == 0 {
        return Err(Error::invalid(format!("no sampled triple has both gaps ≥ {min_gap}")));
    }
    Ok(out.report("slope_inequality", &rules))
}

pub(crate) struct GeodesicIneq<'a> {
    pub f: &'a FunctionOnManifold,
    /// `None` selects the chord bound `(1−t)f(x) + t·f(y)`.
    pub phi: Option<&'a Bifunction>,
    pub circle: Vec<bool>,
}

impl PairInequality for GeodesicIneq<'_> {
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let g = Geodesic::from_coords(&self.circle, x, y);
        let fx = self.f.eval(x)?;
        let fy = self.f.eval(y)?;
        let p = match self.phi {
            Some(phi) => phi.eval(fy, fx)?,
            None => 0.0,
        };
        let mut buf = vec![0.0; x.len()];
        for &t in ts {
            g.point_into(t, &mut buf);
            let lhs = self.f.eval(&buf)?;
            let rhs = match self.phi {
                Some(_) => fx + t * p,
                None => (1.0 - t) * fx + t * fy,
            };
            out.push(RowValue::Value(lhs, rhs));
        }
        Ok(())
    }
}

pub(crate) fn geodesic_problem<'a>(
    f: &'a FunctionOnManifold,
    phi: Option<&'a Bifunction>,
    region: &Region,
    plan: &SamplingPlan,
    strict: bool,
) -> Result<Problem<'a>, Error> {
    plan.validate()?;
    f.check_region(region)?;
    Ok(Problem {
        id: if phi.is_some() { "geodesic_phi_convex" } else { "geodesic_convex" },
        ineq: Box::new(GeodesicIneq { f, phi, circle: f.manifold().circle_mask() }),
        region: region.clone(),
        counts: plan.counts_for(region)?,
        points: plan.points(region)?,
        ts: plan.t_grid(),
        rules: SweepRules {
            threshold: plan.tol.closed,
            strict: strict.then_some(plan.tol.strict),
            skip_degenerate: false,
        },
    })
}

/// `f(γ(t)) ≤ f(x) + t·φ(f(y), f(x))` along the geodesic `γ` from `x` to `y`,
/// strictly (`margin < −τ` at interior `t`, `x ≠ y`) when `strict` is set.
pub fn check_geodesic_phi_convex(
    f: &FunctionOnManifold,
    phi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
    strict: bool,
) -> Result<CheckReport, Error> {
    let mut r = geodesic_problem(f, Some(phi), region, plan, strict)?.report()?;
    if !region.is_totally_convex() {
        r.notes.push("whole-circle factor: antipodal pairs use the counterclockwise arc".to_string());
    }
    Ok(r)
}

/// The chord bound `f(γ(t)) ≤ (1−t)f(x) + t·f(y)`.
pub fn check_geodesic_convex(f: &FunctionOnManifold, region: &Region, plan: &SamplingPlan) -> Result<CheckReport, Error> {
    geodesic_problem(f, None, region, plan, false)?.report()
}

/// Central difference of `s ↦ f(γ(s))` at `at`. On an evaluation error the step
/// shrinks tenfold once; a second failure yields `None`.
pub(crate) fn curve_derivative(
    f: &FunctionOnManifold,
    g: &Geodesic,
    at: f64,
    step: f64,
    buf: &mut [f64],
) -> Option<f64> {
    for h in [step, step / 10.0] {
        g.point_into(at + h, buf);
        let up = f.eval(buf);
        g.point_into(at - h, buf);
        let down = f.eval(buf);
        if let (Ok(u), Ok(d)) = (up, down) {
            return Some((u - d) / (2.0 * h));
        }
    }
    None
}

struct DifferentialIneq<'a> {
    f: &'a FunctionOnManifold,
    phi: &'a Bifunction,
    circle: Vec<bool>,
    step: f64,
}

impl PairInequality for DifferentialIneq<'_> {
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let g = Geodesic::from_coords(&self.circle, x, y);
        let bound = self.phi.eval(self.f.eval(y)?, self.f.eval(x)?)?;
        let mut buf = vec![0.0; x.len()];
        let v = match curve_derivative(self.f, &g, 0.0, self.step, &mut buf) {
            Some(d) => RowValue::Value(d, bound),
            None => RowValue::Inconclusive,
        };
        out.extend(ts.iter().map(|_| v));
        Ok(())
    }
}

/// `d/dt f(γ(t))|₀ ≤ φ(f(y), f(x))` with a central difference along the curve.
/// Violations carry `t = 0`.
pub fn check_differential_criterion(
    f: &FunctionOnManifold,
    phi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    plan.validate()?;
    f.check_region(region)?;
    let points = plan.points(region)?;
    let ineq = DifferentialIneq { f, phi, circle: f.manifold().circle_mask(), step: plan.tol.fd_step };
    let rules = SweepRules::closed(plan.tol.fd);
    let out = sweep(&ineq, &points, &points, &[0.0], &rules)?;
    Ok(out.report("differential_criterion", &rules))
}

/// `g(s) = f(γ(s))` checked in the interval form over `[0, 1]`.
struct RestrictedIneq<'a> {
    f: &'a FunctionOnManifold,
    phi: &'a Bifunction,
    geo: &'a Geodesic,
}

impl RestrictedIneq<'_> {
    fn g(&self, s: f64, buf: &mut [f64]) -> Result<f64, EvalError> {
        self.geo.point_into(s, buf);
        self.f.eval(buf)
    }
}

impl PairInequality for RestrictedIneq<'_> {
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let mut buf = vec![0.0; self.geo.start().coords().len()];
        let (a, b) = (x[0], y[0]);
        let ga = self.g(a, &mut buf)?;
        let gb = self.g(b, &mut buf)?;
        let p = self.phi.eval(ga, gb)?;
        for &t in ts {
            let lhs = self.g(t * a + (1.0 - t) * b, &mut buf)?;
            out.push(RowValue::Value(lhs, gb + t * p));
        }
        Ok(())
    }
}

/// Upper bound on endpoint pairs examined by [`verify_restriction_equivalence`].
pub const RESTRICTION_PAIR_BUDGET: usize = 2048;

struct PairComparison {
    samples: u64,
    manifold: Option<Sample>,
    interval: Option<Violation>,
    manifold_violated: bool,
    interval_violated: bool,
}

/// Compares, pair by pair, the interval check of `g = f∘γ` with the manifold
/// check on the points `γ(s)` of the same curve.
///
/// Both sides use the plan's t-grid as the `s`-grid and the `t`-grid, so a
/// sample `(sᵢ, sⱼ, t)` of the interval form and the sub-geodesic from
/// `γ(sⱼ)` to `γ(sᵢ)` state the same inequality. Pairs with an antipodal circle
/// coordinate are skipped, because the sub-arc run backwards would cross the
/// tie-break. When the grid holds more than [`RESTRICTION_PAIR_BUDGET`] ordered
/// pairs an evenly strided subset is used.
pub fn verify_restriction_equivalence(
    f: &FunctionOnManifold,
    phi: &Bifunction,
    region: &Region,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    plan.validate()?;
    f.check_region(region)?;
    let points = plan.points(region)?;
    let n = points.len();
    let total = n * n;
    let picks: Vec<usize> = if total <= RESTRICTION_PAIR_BUDGET {
        (0..total).collect()
    } else {
        (0..RESTRICTION_PAIR_BUDGET).map(|k| k * total / RESTRICTION_PAIR_BUDGET).collect()
    };
    let circle = f.manifold().circle_mask();
    let ss = plan.t_grid();
    let ts = plan.t_grid();
    let rules = SweepRules::closed(plan.tol.closed);

    let compare = |x: &[f64], y: &[f64]| -> Result<Option<PairComparison>, Error> {
        let geo = Geodesic::from_coords(&circle, x, y);
        let vel = geo.velocity(0.0)?;
        if circle.iter().zip(&vel).any(|(&c, v)| c && (v.abs() - PI).abs() < 1e-12) {
            return Ok(None);
        }
        let mut buf = vec![0.0; x.len()];
        let curve: Vec<Vec<f64>> = ss
            .iter()
            .map(|&s| {
                geo.point_into(s, &mut buf);
                buf.clone()
            })
            .collect();
        let on_manifold =
            sweep(&GeodesicIneq { f, phi: Some(phi), circle: circle.clone() }, &curve, &curve, &ts, &rules)?;
        let s_points: Vec<Vec<f64>> = ss.iter().map(|&s| vec![s]).collect();
        let on_interval = sweep(&RestrictedIneq { f, phi, geo: &geo }, &s_points, &s_points, &ts, &rules)?;
        // An interval sample (sᵢ, sⱼ, t) is the geodesic sample from γ(sⱼ) to γ(sᵢ).
        let interval = on_interval.worst.as_ref().filter(|w| w.margin > rules.threshold).map(|w| {
            let mut p = vec![0.0; x.len()];
            let mut q = vec![0.0; x.len()];
            geo.point_into(w.y[0], &mut p);
            geo.point_into(w.x[0], &mut q);
            Violation { x: p, y: q, t: w.t, lhs: w.lhs, rhs: w.rhs, margin: w.margin }
        });
        Ok(Some(PairComparison {
            samples: on_manifold.samples + on_interval.samples,
            manifold_violated: on_manifold.violations > 0,
            interval_violated: on_interval.violations > 0,
            manifold: on_manifold.worst,
            interval,
        }))
    };

    let results: Vec<Result<Option<PairComparison>, Error>> =
        picks.par_iter().map(|&k| compare(&points[k / n], &points[k % n])).collect();

    let (mut compared, mut skipped, mut disagree, mut both_violated, mut samples) = (0u64, 0u64, 0u64, 0u64, 0u64);
    let mut witness: Option<Violation> = None;
    for r in results {
        let Some(c) = r? else {
            skipped += 1;
            continue;
        };
        compared += 1;
        samples += c.samples;
        if c.manifold_violated && c.interval_violated {
            both_violated += 1;
        }
        if c.manifold_violated != c.interval_violated {
            disagree += 1;
            if witness.is_none() {
                witness = if c.manifold_violated { c.manifold.map(|s| s.violation()) } else { c.interval };
            }
        }
    }
    let status = if disagree == 0 { Status::PassOnSamples } else { Status::Violated };
    let mut r = CheckReport::new("restriction_equivalence", status)
        .metric("pairs_compared", compared as f64)
        .metric("pairs_skipped_antipodal", skipped as f64)
        .metric("disagreements", disagree as f64)
        .metric("pairs_both_violated", both_violated as f64)
        .metric("pairs_both_pass", (compared - disagree - both_violated) as f64)
        .note(format!(
            "{compared} pairs compared: {both_violated} violated on both sides, {disagree} disagreements"
        ));
    r.samples = samples;
    r.worst_margin = witness.as_ref().map(|w| w.margin);
    r.violation = witness;
    Ok(r)
}

fn fd1(f: &Expression, x: f64, h: f64) -> Result<f64, EvalError> {
    Ok((f.eval_scalar(x + h)? - f.eval_scalar(x - h)?) / (2.0 * h))
}

/// Searches `(ξ, η) ∈ (x₁, x₂)²` for the chain
/// `f′(ξ) ≥ r·f′(η) ≥ f′(η)` with `r = φ(f(x₁), f(x₂))/(f(x₁) − f(x₂))`.
///
/// An existence claim: the result is `pass-on-samples` or `inconclusive`,
/// never `violated`.
pub fn audit_mean_value(
    f: &Expression,
    phi: &Bifunction,
    x1: f64,
    x2: f64,
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    plan.validate()?;
    one_var(f)?;
    if !(x1 < x2) {
        return Err(Error::invalid("mean-value audit needs x1 < x2"));
    }
    let (f1, f2) = (f.eval_scalar(x1)?, f.eval_scalar(x2)?);
    if (f1 - f2).abs() <= plan.tol.closed {
        return Ok(CheckReport::hypothesis_failed("mean_value", Vec::new(), "f(x1) = f(x2)"));
    }
    let ratio = phi.eval(f1, f2)? / (f1 - f2);
    let m = plan.line_count;
    let inner: Vec<f64> = (1..=m).map(|k| x1 + (x2 - x1) * k as f64 / (m + 1) as f64).collect();
    let h = plan.tol.fd_step;
    let d: Vec<f64> = inner.iter().map(|&x| fd1(f, x, h)).collect::<Result<_, _>>()?;
    let tol = plan.tol.fd;
    // Best pair maximizes the smaller slack of the two links; first found wins ties.
    let mut best: Option<(f64, usize, usize)> = None;
    for (i, &dxi) in d.iter().enumerate() {
        for (j, &deta) in d.iter().enumerate() {
            let slack = (dxi - ratio * deta).min(ratio * deta - deta) + tol;
            if best.is_none_or(|(s, _, _)| slack > s) {
                best = Some((slack, i, j));
            }
        }
    }
    let (slack, i, j) = best.expect("grid is non-empty");
    let status = if slack >= 0.0 { Status::PassOnSamples } else { Status::Inconclusive };
    let mut r = CheckReport::new("mean_value", status)
        .metric("ratio", ratio)
        .metric("xi", inner[i])
        .metric("eta", inner[j])
        .metric("f_prime_xi", d[i])
        .metric("f_prime_eta", d[j])
        .metric("slack", slack);
    r.samples = (m * m) as u64;
    r.notes.push(if status == Status::PassOnSamples {
        format!("chain holds at xi = {}, eta = {}", inner[i], inner[j])
    } else {
        "no sampled pair satisfies the chain; existence is not refuted".to_string()
    });
    Ok(r)
}

/// Evaluates three statements at `x < y < z` with FD derivatives:
/// (i) `f′(y)(x−y) + f′(z)(y−z) ≤ φ(f(x),f(y)) + φ(f(y),f(z))`,
/// (ii) `f′(y) + f′(z) ≤ [φ(f(x),f(y)) + φ(f(y),f(z))]/(x−z)`,
/// (iii) the same with `≥`. The status follows (i); (ii) and (iii) go in the
/// notes and metrics.
pub fn audit_three_point(
    f: &Expression,
    phi: &Bifunction,
    (x, y, z): (f64, f64, f64),
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    plan.validate()?;
    one_var(f)?;
    if !(x < y && y < z) {
        return Err(Error::invalid("three-point audit needs x < y < z"));
    }
    let h = plan.tol.fd_step;
    let (dy, dz) = (fd1(f, y, h)?, fd1(f, z, h)?);
    let (fx, fy, fz) = (f.eval_scalar(x)?, f.eval_scalar(y)?, f.eval_scalar(z)?);
    let phis = phi.eval(fx, fy)? + phi.eval(fy, fz)?;
    let i_lhs = dy * (x - y) + dz * (y - z);
    let ii_lhs = dy + dz;
    let ii_rhs = phis / (x - z);
    let tol = plan.tol.fd;
    let holds_i = i_lhs - phis <= tol;
    let holds_ii = ii_lhs - ii_rhs <= tol;
    let holds_iii = ii_rhs - ii_lhs <= tol;
    let word = |b: bool| if b { "holds" } else { "violated" };
    let mut r = CheckReport::new("three_point", if holds_i { Status::PassOnSamples } else { Status::Violated })
        .metric("i_lhs", i_lhs)
        .metric("i_rhs", phis)
        .metric("ii_lhs", ii_lhs)
        .metric("ii_rhs", ii_rhs)
        .metric("ii_holds", holds_ii as u8 as f64)
        .metric("iii_holds", holds_iii as u8 as f64)
        .note(format!("(i) intermediate: {i_lhs} <= {phis} {}", word(holds_i)))
        .note(format!("(ii) displayed: {ii_lhs} <= {ii_rhs} {}", word(holds_ii)))
        .note(format!("(iii) sign-corrected: {ii_lhs} >= {ii_rhs} {}", word(holds_iii)));
    r.samples = 1;
    r.worst_margin = Some(i_lhs - phis);
    if !holds_i {
        r.violation = Some(Violation {
            x: vec![x],
            y: vec![z],
            t: (y - x) / (z - x),
            lhs: i_lhs,
            rhs: phis,
            margin: i_lhs - phis,
        });
    }
    Ok(r)
}

/// Declares `f` over `h1..hn`; a single foreign variable is accepted when `n = 1`.
pub(crate) fn over_coordinates(f: &Expression, n: usize) -> Result<Expression, Error> {
    let names = ManifoldSpec::euclidean(n).coordinate_names();
    if let Ok(e) = f.with_vars(&names) {
        return Ok(e);
    }
    if n == 1 && f.vars().len() == 1 {
        return Ok(Expression::from_parts(f.root().clone(), names));
    }
    Err(Error::invalid(format!("function variables {:?} are not among {:?}", f.vars(), names)))
}

/// Declares each component of `η` over `x1..xn, y1..yn`; `x`, `y` are accepted when `n = 1`.
pub(crate) fn eta_over_pairs(eta: &[Expression], n: usize) -> Result<Vec<Expression>, Error> {
    if eta.len() != n {
        return Err(Error::invalid(format!("η has {} components for dimension {n}", eta.len())));
    }
    let mut names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    names.extend((1..=n).map(|i| format!("y{i}")));
    eta.iter()
        .map(|e| {
            if let Ok(d) = e.with_vars(&names) {
                return Ok(d);
            }
            if n == 1 {
                let aliased = vec!["x".to_string(), "y".to_string()];
                if let Ok(d) = e.with_vars(&aliased) {
                    return Ok(Expression::from_parts(d.root().clone(), names.clone()));
                }
            }
            Err(Error::invalid(format!("η variables {:?} are not among {:?}", e.vars(), names)))
        })
        .collect()
}

fn eta_values(eta: &[Expression], x: &[f64], y: &[f64]) -> Result<Vec<f64>, EvalError> {
    let args: Vec<f64> = x.iter().chain(y).copied().collect();
    eta.iter().map(|e| e.eval_slice(&args)).collect()
}

pub(crate) struct PreinvexIneq<'a> {
    pub f: &'a Expression,
    pub phi: &'a Bifunction,
    pub eta: &'a [Expression],
}

impl PairInequality for PreinvexIneq<'_> {
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let e = eta_values(self.eta, x, y)?;
        let fx = self.f.eval_slice(x)?;
        let fy = self.f.eval_slice(y)?;
        let p = self.phi.eval(fx, fy)?;
        let mut buf = vec![0.0; x.len()];
        for &t in ts {
            for (b, (yi, ei)) in buf.iter_mut().zip(y.iter().zip(&e)) {
                *b = yi + t * ei;
            }
            out.push(RowValue::Value(self.f.eval_slice(&buf)?, fy + t * p));
        }
        Ok(())
    }
}

/// Distance by which `y + tη(x, y)` leaves the box.
struct InvexIneq<'a> {
    eta: &'a [Expression],
    bounds: &'a [(f64, f64)],
}

impl PairInequality for InvexIneq<'_> {
    fn row(&self, x: &[f64], y: &[f64], ts: &[f64], out: &mut Vec<RowValue>) -> Result<(), Error> {
        let e = eta_values(self.eta, x, y)?;
        for &t in ts {
            let excess = y
                .iter()
                .zip(&e)
                .zip(self.bounds)
                .map(|((yi, ei), &(a, b))| {
                    let p = yi + t * ei;
                    (a - p).max(p - b).max(0.0)
                })
                .fold(0.0, f64::max);
            out.push(RowValue::Value(excess, 0.0));
        }
        Ok(())
    }
}

pub(crate) fn preinvex_problem<'a>(
    f: &'a Expression,
    phi: &'a Bifunction,
    eta: &'a [Expression],
    bounds: &[(f64, f64)],
    plan: &SamplingPlan,
) -> Result<Problem<'a>, Error> {
    plan.validate()?;
    let spec = ManifoldSpec::euclidean(bounds.len());
    let region = Region::boxed(&spec, bounds)?;
    Ok(Problem {
        id: "phi_preinvex",
        ineq: Box::new(PreinvexIneq { f, phi, eta }),
        counts: plan.counts_for(&region)?,
        points: plan.points(&region)?,
        region,
        ts: plan.t_grid(),
        rules: SweepRules::closed(plan.tol.closed),
    })
}

pub(crate) fn invexity_report(
    eta: &[Expression],
    bounds: &[(f64, f64)],
    points: &[Vec<f64>],
    ts: &[f64],
    tol: f64,
) -> Result<CheckReport, Error> {
    let rules = SweepRules { threshold: tol, strict: None, skip_degenerate: false };
    Ok(sweep(&InvexIneq { eta, bounds }, points, points, ts, &rules)?.report("invex_set", &rules))
}

/// `f(y + tη(x, y)) ≤ f(y) + t·φ(f(x), f(y))` on a box `K ⊂ ℝⁿ`, after checking
/// that `y + tη(x, y)` stays in `K` on the samples.
///
/// `f` is written over `h1..hn` (any single variable when `n = 1`); each
/// component of `η` over `x1..xn, y1..yn` (or `x`, `y` when `n = 1`).
pub fn check_phi_preinvex(
    f: &Expression,
    phi: &Bifunction,
    eta: &[Expression],
    bounds: &[(f64, f64)],
    plan: &SamplingPlan,
) -> Result<CheckReport, Error> {
    let n = bounds.len();
    let f = over_coordinates(f, n)?;
    let eta = eta_over_pairs(eta, n)?;
    let problem = preinvex_problem(&f, phi, &eta, bounds, plan)?;
    let invex = invexity_report(&eta, bounds, &problem.points, &problem.ts, 1e-12)?;
    if !invex.passed() {
        return Ok(CheckReport::hypothesis_failed("phi_preinvex", vec![invex], "K is not invex with respect to η"));
    }
    let conclusion = problem.report()?;
    Ok(CheckReport::concluded("phi_preinvex", vec![invex], conclusion))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan() -> SamplingPlan {
        SamplingPlan::default()
    }

    fn e(s: &str) -> Expression {
        Expression::parse(s).unwrap()
    }

    #[test]
    fn interval_examples() {
        let diff = Bifunction::diff();
        assert!(check_phi_convex_interval(&e("x^2"), &diff, (0.0, 1.0), &plan()).unwrap().passed());
        assert!(check_phi_convex_interval(&e("x^3"), &diff, (0.0, 2.0), &plan()).unwrap().passed());
        let r = check_phi_convex_interval(&e("x^3"), &diff, (-2.0, 0.0), &plan()).unwrap();
        assert_eq!(r.status, Status::Violated);
        assert!(r.worst_margin.unwrap() >= 3.0 - 1e-12);
    }

    #[test]
    fn cube_witness_at_midpoint() {
        // f(0.5·(−2) + 0.5·0) = −1 against 0 + 0.5·(−8 − 0) = −4.
        let diff = Bifunction::diff();
        let f = e("x^3");
        let row = {
            let mut out = Vec::new();
            IntervalIneq { f: &f, phi: &diff }.row(&[-2.0], &[0.0], &[0.5], &mut out).unwrap();
            out[0]
        };
        assert_eq!(row, RowValue::Value(-1.0, -4.0));
    }

    #[test]
    fn slope_examples() {
        let diff = Bifunction::diff();
        assert!(check_slope_inequality(&e("x^2"), &diff, (0.0, 1.0), 1e-3, &plan()).unwrap().passed());
        let r = check_slope_inequality(&e("x^3"), &diff, (-2.0, 0.0), 1e-3, &plan()).unwrap();
        assert_eq!(r.status, Status::Violated);
        assert!(check_slope_inequality(&e("3"), &diff, (0.0, 1.0), 1e-3, &plan()).unwrap().passed());
        assert!(check_slope_inequality(&e("x"), &diff, (0.0, 1.0), 10.0, &plan()).is_err());
    }

    #[test]
    fn differential_examples() {
        let line = ManifoldSpec::line();
        let diff = Bifunction::diff();
        let sq = FunctionOnManifold::parse(&line, "h1^2").unwrap();
        let r01 = Region::boxed(&line, &[(0.0, 1.0)]).unwrap();
        assert!(check_differential_criterion(&sq, &diff, &r01, &plan()).unwrap().passed());
        let cube = FunctionOnManifold::parse(&line, "h1^3").unwrap();
        let r = check_differential_criterion(&cube, &diff, &Region::boxed(&line, &[(-2.0, 0.0)]).unwrap(), &plan())
            .unwrap();
        assert_eq!(r.status, Status::Violated);
        // At x = −2, y = 0 the derivative is 3x²(y − x) = 24 against f(0) − f(−2) = 8.
        let g = Geodesic::from_coords(&[false], &[-2.0], &[0.0]);
        let d = curve_derivative(&cube, &g, 0.0, 1e-5, &mut [0.0]).unwrap();
        assert!((d - 24.0).abs() < 1e-4);
    }

    #[test]
    fn mean_value_examples() {
        let diff = Bifunction::diff();
        let r = audit_mean_value(&e("x^2"), &diff, 0.0, 1.0, &plan()).unwrap();
        assert!(r.passed());
        assert!((r.metrics["ratio"] - 1.0).abs() < 1e-12);
        assert!(audit_mean_value(&e("x"), &diff, 0.0, 1.0, &plan()).unwrap().passed());
        assert_eq!(audit_mean_value(&e("2"), &diff, 0.0, 1.0, &plan()).unwrap().status, Status::HypothesisFailed);
    }

    #[test]
    fn three_point_statements() {
        let diff = Bifunction::diff();
        let r = audit_three_point(&e("x^2"), &diff, (0.0, 1.0, 2.0), &plan()).unwrap();
        assert!(r.passed());
        for (k, v) in [("i_lhs", -6.0), ("i_rhs", -4.0), ("ii_lhs", 6.0), ("ii_rhs", 2.0)] {
            assert!((r.metrics[k] - v).abs() < 1e-9, "{k}");
        }
        assert_eq!(r.metrics["ii_holds"], 0.0);
        assert_eq!(r.metrics["iii_holds"], 1.0);
        assert!(audit_three_point(&e("3*x + 1"), &diff, (0.0, 1.0, 2.0), &plan()).unwrap().passed());
        assert!(audit_three_point(&e("x^3"), &diff, (0.0, 1.0, 2.0), &plan()).unwrap().passed());
        assert!(audit_three_point(&e("x"), &diff, (1.0, 0.0, 2.0), &plan()).is_err());
    }

    #[test]
    fn preinvex_examples() {
        let diff = Bifunction::diff();
        let seg = [e("x - y")];
        assert!(check_phi_preinvex(&e("x^2"), &diff, &seg, &[(0.0, 1.0)], &plan()).unwrap().passed());
        let zero = [Expression::parse_with_vars("0", &["x", "y"]).unwrap()];
        let r = check_phi_preinvex(&e("x^2"), &diff, &zero, &[(0.0, 1.0)], &plan()).unwrap();
        assert_eq!(r.status, Status::Violated);
        let r = check_phi_preinvex(&e("x^3"), &diff, &seg, &[(-2.0, 0.0)], &plan()).unwrap();
        assert_eq!(r.status, Status::Violated);
        let out = [e("2*(x - y)")];
        let r = check_phi_preinvex(&e("x^2"), &diff, &out, &[(0.0, 1.0)], &plan()).unwrap();
        assert_eq!(r.status, Status::HypothesisFailed);
    }
}
